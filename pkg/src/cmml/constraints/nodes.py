"""AST node types for the data-requirements language.

Statements come in four kinds: per-feature value ranges, row-level rules,
dataset-level aggregate invariants, and derive statements that materialize a
boolean expression as a new binary feature. Expression nodes are plain frozen
dataclasses so structural equality doubles as AST equality in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

COMPARATORS = (">", ">=", "<", "<=", "==", "!=")
AGG_FUNCS = ("mean", "std", "min", "max", "count", "frac_missing")


# -- operands ---------------------------------------------------------------


@dataclass(frozen=True)
class FeatureRef:
    name: str


@dataclass(frozen=True)
class Number:
    value: float


Operand = Union[FeatureRef, Number]


# -- boolean expressions -------------------------------------------------------


@dataclass(frozen=True)
class Cmp:
    left: Operand
    op: str
    right: Operand


@dataclass(frozen=True)
class MissingPred:
    feature: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class Implies:
    antecedent: "Expr"
    consequent: "Expr"


Expr = Union[Cmp, MissingPred, Not, And, Or, Implies]


# -- aggregate expressions (invariant bodies) ------------------------------------


@dataclass(frozen=True)
class Agg:
    func: str  # one of AGG_FUNCS
    feature: str


@dataclass(frozen=True)
class Frac:
    expr: Expr


@dataclass(frozen=True)
class AggCmp:
    agg: Union[Agg, Frac]
    op: str
    value: float


# -- statements -----------------------------------------------------------------


@dataclass(frozen=True)
class Bound:
    op: str
    value: float


@dataclass(frozen=True)
class RangeStmt:
    name: str  # doubles as the constrained feature name
    bounds: tuple[Bound, ...]

    kind = "range"

    @property
    def feature(self) -> str:
        return self.name

    def as_expr(self) -> Expr:
        cmps = tuple(Cmp(FeatureRef(self.name), b.op, Number(b.value)) for b in self.bounds)
        return cmps[0] if len(cmps) == 1 else And(cmps)


@dataclass(frozen=True)
class RuleStmt:
    name: str
    body: Expr

    kind = "rule"


@dataclass(frozen=True)
class InvariantStmt:
    name: str
    body: AggCmp

    kind = "invariant"


@dataclass(frozen=True)
class DeriveStmt:
    name: str
    body: Expr

    kind = "derive"


Statement = Union[RangeStmt, RuleStmt, InvariantStmt, DeriveStmt]


@dataclass(frozen=True)
class ConstraintDoc:
    statements: tuple[Statement, ...]
    source_text: str = ""

    def __post_init__(self):
        names = [s.name for s in self.statements]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate statement names: {dupes}")

    def derive_statements(self) -> tuple[DeriveStmt, ...]:
        return tuple(s for s in self.statements if isinstance(s, DeriveStmt))


# -- referenced-feature traversal ---------------------------------------------------


def referenced_features(node) -> set[str]:
    """Every feature name an expression, aggregate or statement mentions."""
    if isinstance(node, FeatureRef):
        return {node.name}
    if isinstance(node, Number):
        return set()
    if isinstance(node, Cmp):
        return referenced_features(node.left) | referenced_features(node.right)
    if isinstance(node, MissingPred):
        return {node.feature}
    if isinstance(node, Not):
        return referenced_features(node.operand)
    if isinstance(node, (And, Or)):
        out: set[str] = set()
        for op in node.operands:
            out |= referenced_features(op)
        return out
    if isinstance(node, Implies):
        return referenced_features(node.antecedent) | referenced_features(node.consequent)
    if isinstance(node, Agg):
        return {node.feature}
    if isinstance(node, Frac):
        return referenced_features(node.expr)
    if isinstance(node, AggCmp):
        return referenced_features(node.agg)
    if isinstance(node, RangeStmt):
        return {node.feature}
    if isinstance(node, (RuleStmt, DeriveStmt, InvariantStmt)):
        return referenced_features(node.body)
    raise TypeError(f"unsupported node {node!r}")


# -- pretty printer ----------------------------------------------------------------


def _fmt_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _fmt_operand(op: Operand) -> str:
    if isinstance(op, FeatureRef):
        return op.name
    return _fmt_number(op.value)


def _fmt_expr(expr: Expr, parent: str = "top") -> str:
    """Render with minimal parentheses: implies < or < and < unary."""
    if isinstance(expr, Cmp):
        return f"{_fmt_operand(expr.left)} {expr.op} {_fmt_operand(expr.right)}"
    if isinstance(expr, MissingPred):
        return f"missing({expr.feature})"
    if isinstance(expr, Not):
        inner = _fmt_expr(expr.operand, "unary")
        return f"not {inner}"
    if isinstance(expr, And):
        text = " and ".join(_fmt_expr(o, "and") for o in expr.operands)
        # nested And must keep its parens so the reparsed tree shape matches
        return f"({text})" if parent in ("and", "unary") else text
    if isinstance(expr, Or):
        text = " or ".join(_fmt_expr(o, "or") for o in expr.operands)
        return f"({text})" if parent in ("or", "and", "unary") else text
    if isinstance(expr, Implies):
        text = f"{_fmt_expr(expr.antecedent, 'or')} implies {_fmt_expr(expr.consequent, 'or')}"
        return f"({text})" if parent != "top" else text
    raise TypeError(f"unsupported expression {expr!r}")


def pretty_print(doc: ConstraintDoc) -> str:
    """Canonical source text; parse(pretty_print(parse(s))) == parse(s)."""
    lines = []
    for stmt in doc.statements:
        if isinstance(stmt, RangeStmt):
            bounds = ", ".join(f"{b.op} {_fmt_number(b.value)}" for b in stmt.bounds)
            lines.append(f"range {stmt.name}: {bounds}")
        elif isinstance(stmt, RuleStmt):
            lines.append(f"rule {stmt.name}: {_fmt_expr(stmt.body)}")
        elif isinstance(stmt, DeriveStmt):
            lines.append(f"derive {stmt.name}: {_fmt_expr(stmt.body)}")
        elif isinstance(stmt, InvariantStmt):
            agg = stmt.body.agg
            if isinstance(agg, Frac):
                agg_text = f"frac({_fmt_expr(agg.expr)})"
            else:
                agg_text = f"{agg.func}({agg.feature})"
            lines.append(f"invariant {stmt.name}: {agg_text} {stmt.body.op} {_fmt_number(stmt.body.value)}")
        else:
            raise TypeError(f"unsupported statement {stmt!r}")
    return "\n".join(lines) + ("\n" if lines else "")
