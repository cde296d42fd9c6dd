"""Evaluate parsed constraints against a dataset.

Row-level statements use three-valued logic: a comparison over a MISSING cell
is unknown, unknowns propagate through and/or/not, and a row whose overall
verdict stays unknown is skipped (and counted) rather than failed — absent
data is a completeness problem, not a violation. ``missing(f)`` itself is
always decidable. Implications whose antecedent never matched any row are
reported vacuous, distinct from pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..tabular import Dataset, FeatureMeta, MISSING, UnknownFeatureError
from .nodes import (
    Agg,
    AggCmp,
    And,
    Cmp,
    ConstraintDoc,
    DeriveStmt,
    FeatureRef,
    Frac,
    Implies,
    InvariantStmt,
    MissingPred,
    Not,
    Number,
    Or,
    RangeStmt,
    RuleStmt,
    referenced_features,
)

UNKNOWN = "unknown"  # third truth value


class ConstraintEvalError(ValueError):
    """Statement cannot be evaluated against this dataset."""


@dataclass(frozen=True)
class StatementResult:
    name: str
    kind: str
    status: str  # pass | fail | vacuous
    violating_row_indices: tuple[int, ...] = ()
    skipped_row_count: int = 0
    observed: Optional[float] = None  # invariant aggregate value


@dataclass(frozen=True)
class ViolationReport:
    results: tuple[StatementResult, ...]

    def __getitem__(self, name: str) -> StatementResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def failed(self) -> tuple[StatementResult, ...]:
        return tuple(r for r in self.results if r.status == "fail")

    def row_level_results(self) -> tuple[StatementResult, ...]:
        return tuple(r for r in self.results if r.kind in ("range", "rule", "derive"))


def _check_references(doc: ConstraintDoc, d: Dataset):
    for stmt in doc.statements:
        for feature in sorted(referenced_features(stmt)):
            if not d.has_feature(feature):
                raise UnknownFeatureError(
                    f"statement {stmt.name!r} references unknown feature {feature!r}"
                )


def _compare(left, op: str, right) -> bool:
    numericish = lambda v: isinstance(v, (int, float, np.floating, np.integer))
    if op in (">", ">=", "<", "<=") and not (numericish(left) and numericish(right)):
        raise ConstraintEvalError(
            f"ordered comparison {op!r} needs numeric values, got {left!r} {op} {right!r}"
        )
    # plain bool: the evaluator's three-valued logic tests identity with True/False
    if op == ">":
        return bool(left > right)
    if op == ">=":
        return bool(left >= right)
    if op == "<":
        return bool(left < right)
    if op == "<=":
        return bool(left <= right)
    if op == "==":
        return bool(left == right)
    return bool(left != right)


class _RowEvaluator:
    """Evaluates one expression over every row, Kleene-style."""

    def __init__(self, d: Dataset):
        self.d = d
        self._cache = {}

    def _values(self, name: str) -> tuple:
        if name not in self._cache:
            self._cache[name] = self.d.column(name)
        return self._cache[name]

    def _operand(self, operand, row: int):
        if isinstance(operand, Number):
            return operand.value
        value = self._values(operand.name)[row]
        return UNKNOWN if value is MISSING else value

    def eval(self, expr, row: int):
        if isinstance(expr, Cmp):
            left = self._operand(expr.left, row)
            right = self._operand(expr.right, row)
            if left is UNKNOWN or right is UNKNOWN:
                return UNKNOWN
            return _compare(left, expr.op, right)
        if isinstance(expr, MissingPred):
            return self._values(expr.feature)[row] is MISSING
        if isinstance(expr, Not):
            inner = self.eval(expr.operand, row)
            return UNKNOWN if inner is UNKNOWN else not inner
        if isinstance(expr, And):
            saw_unknown = False
            for op in expr.operands:
                v = self.eval(op, row)
                if v is False:
                    return False
                saw_unknown |= v is UNKNOWN
            return UNKNOWN if saw_unknown else True
        if isinstance(expr, Or):
            saw_unknown = False
            for op in expr.operands:
                v = self.eval(op, row)
                if v is True:
                    return True
                saw_unknown |= v is UNKNOWN
            return UNKNOWN if saw_unknown else False
        if isinstance(expr, Implies):
            antecedent = self.eval(expr.antecedent, row)
            if antecedent is UNKNOWN:
                return UNKNOWN
            if antecedent is False:
                return True
            return self.eval(expr.consequent, row)
        raise TypeError(f"unsupported expression {expr!r}")

    def antecedent_matches(self, expr: Implies) -> int:
        return sum(
            1 for row in range(self.d.n_rows) if self.eval(expr.antecedent, row) is True
        )


def _eval_row_statement(stmt, expr, ev: _RowEvaluator, n_rows: int) -> StatementResult:
    violating = []
    skipped = 0
    for row in range(n_rows):
        verdict = ev.eval(expr, row)
        if verdict is UNKNOWN:
            skipped += 1
        elif verdict is False:
            violating.append(row)
    if violating:
        status = "fail"
    elif isinstance(expr, Implies) and ev.antecedent_matches(expr) == 0:
        status = "vacuous"
    else:
        status = "pass"
    return StatementResult(stmt.name, stmt.kind, status, tuple(violating), skipped)


def _aggregate(agg, d: Dataset, ev: _RowEvaluator, stmt_name: str) -> Optional[float]:
    if isinstance(agg, Frac):
        true_count = 0
        evaluable = 0
        for row in range(d.n_rows):
            v = ev.eval(agg.expr, row)
            if v is UNKNOWN:
                continue
            evaluable += 1
            true_count += v is True
        return true_count / evaluable if evaluable else None
    meta = d.feature(agg.feature)
    if agg.func == "frac_missing":
        return d.missing_fraction(agg.feature)
    if agg.func == "count":
        return float(sum(1 for v in d.column(agg.feature) if v is not MISSING))
    if meta.kind == "categorical":
        raise ConstraintEvalError(
            f"invariant {stmt_name!r}: {agg.func}() needs a numeric feature, "
            f"{agg.feature!r} is categorical"
        )
    values = d.numeric_values(agg.feature)
    if values.size == 0:
        return None
    if agg.func == "mean":
        return float(np.mean(values))
    if agg.func == "std":
        return float(np.std(values, ddof=1)) if values.size >= 2 else None
    if agg.func == "min":
        return float(values.min())
    return float(values.max())


def evaluate(doc: ConstraintDoc, d: Dataset) -> ViolationReport:
    """Check every statement; derive statements are validated as rules here.

    Results keep the document's statement order. Unknown feature references
    raise UnknownFeatureError naming the statement and the feature.
    """
    _check_references(doc, d)
    ev = _RowEvaluator(d)
    results = []
    for stmt in doc.statements:
        if isinstance(stmt, RangeStmt):
            results.append(_eval_row_statement(stmt, stmt.as_expr(), ev, d.n_rows))
        elif isinstance(stmt, DeriveStmt):
            # a derive body is a definition, not an assertion: report only
            # how many rows it cannot decide
            skipped = sum(
                1 for row in range(d.n_rows) if ev.eval(stmt.body, row) is UNKNOWN
            )
            results.append(StatementResult(stmt.name, stmt.kind, "pass", (), skipped))
        elif isinstance(stmt, RuleStmt):
            results.append(_eval_row_statement(stmt, stmt.body, ev, d.n_rows))
        elif isinstance(stmt, InvariantStmt):
            observed = _aggregate(stmt.body.agg, d, ev, stmt.name)
            ok = observed is not None and _compare(observed, stmt.body.op, stmt.body.value)
            results.append(
                StatementResult(
                    stmt.name, stmt.kind, "pass" if ok else "fail", (), 0, observed
                )
            )
        else:
            raise TypeError(f"unsupported statement {stmt!r}")
    return ViolationReport(tuple(results))


def derive_features(doc: ConstraintDoc, d: Dataset) -> Dataset:
    """Materialize each derive statement as a binary feature (role=derived).

    Cell is 1 where the body holds, 0 where it does not, MISSING where the
    body is not evaluable for that row. Existing features keep their order;
    new columns append in statement order.
    """
    derives = doc.derive_statements()
    if not derives:
        return d
    _check_references(ConstraintDoc(derives), d)
    ev = _RowEvaluator(d)
    result = d
    for stmt in derives:
        if result.has_feature(stmt.name):
            raise ValueError(
                f"derive statement {stmt.name!r} collides with an existing feature"
            )
        cells = []
        for row in range(d.n_rows):
            verdict = ev.eval(stmt.body, row)
            cells.append(MISSING if verdict is UNKNOWN else float(verdict))
        result = result.add_column(
            FeatureMeta(name=stmt.name, kind="binary", role="derived"), cells
        )
    return result
