"""Feature-by-criterion data-quality scorecard.

Two cells per feature are computed from evidence: completeness (from the
missing fraction) and consistency (from the pass rate of row-level
statements that reference the feature). Every other criterion is judgment
and must be declared in config; declared cells carry their provenance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from ..tabular import Dataset
from .evaluate import ViolationReport
from .nodes import referenced_features

GRADES = ("++", "+", "0", "-", "--")

# criterion identifiers grouped the way the report lays them out
CRITERIA_GROUPS: dict[str, tuple[str, ...]] = {
    "accuracy": (
        "believability",
        "accuracy",
        "objectivity",
        "completeness",
        "traceability",
        "reputation",
        "variety",
    ),
    "relevancy": (
        "value_added",
        "relevancy",
        "timeliness",
        "ease_of_operation",
        "appropriate_amount_of_data",
        "flexibility",
    ),
    "representation": (
        "interpretability",
        "ease_of_understanding",
        "consistency",
        "conciseness",
    ),
    "accessibility": (
        "accessibility",
        "cost_effectiveness",
        "access_security",
    ),
}

CRITERIA_LABELS = {
    "believability": "Believability",
    "accuracy": "Accuracy",
    "objectivity": "Objectivity",
    "completeness": "Completeness",
    "traceability": "Traceability",
    "reputation": "Reputation",
    "variety": "Variety",
    "value_added": "Value-added",
    "relevancy": "Relevancy",
    "timeliness": "Timeliness",
    "ease_of_operation": "Ease of operation",
    "appropriate_amount_of_data": "Appropriate amount of data",
    "flexibility": "Flexibility",
    "interpretability": "Interpretability",
    "ease_of_understanding": "Ease of understanding",
    "consistency": "Consistency",
    "conciseness": "Conciseness",
    "accessibility": "Accessibility",
    "cost_effectiveness": "Cost-effectiveness",
    "access_security": "Access security",
}

COMPUTED_CRITERIA = ("completeness", "consistency")

ALL_CRITERIA = tuple(c for group in CRITERIA_GROUPS.values() for c in group)


@dataclass(frozen=True)
class ScorecardCell:
    grade: str  # one of GRADES
    provenance: str  # computed | declared

    def __post_init__(self):
        if self.grade not in GRADES:
            raise ValueError(f"unknown grade {self.grade!r}")
        if self.provenance not in ("computed", "declared"):
            raise ValueError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class QualityScorecard:
    features: tuple[str, ...]
    cells: Mapping[str, Mapping[str, ScorecardCell]]  # feature -> criterion -> cell

    def cell(self, feature: str, criterion: str) -> Optional[ScorecardCell]:
        return self.cells.get(feature, {}).get(criterion)


def completeness_grade(missing_fraction: float) -> str:
    if missing_fraction == 0:
        return "++"
    if missing_fraction <= 0.05:
        return "+"
    if missing_fraction <= 0.30:
        return "-"
    return "--"


def consistency_grade(pass_rate: float) -> str:
    if pass_rate >= 1.0:
        return "++"
    if pass_rate >= 0.8:
        return "+"
    if pass_rate >= 0.5:
        return "0"
    if pass_rate >= 0.2:
        return "-"
    return "--"


def quality_scorecard(
    d: Dataset,
    report: Optional[ViolationReport],
    declared: Optional[Mapping[str, Mapping[str, str]]] = None,
    doc=None,
) -> QualityScorecard:
    """Assemble the grid for every non-excluded feature of the dataset.

    ``declared`` maps feature -> criterion -> grade for the judgment-only
    criteria; attempts to declare a computed criterion are rejected. The
    constraint doc (when given) ties row-level statements back to the
    features they reference for the consistency cells.
    """
    declared = declared or {}
    features = tuple(f.name for f in d.features if f.role != "excluded")

    # pass rate of row-level assertions (ranges and rules) per referenced feature
    referencing: dict[str, list[str]] = {name: [] for name in features}
    if report is not None and doc is not None:
        statuses = {r.name: r.status for r in report.row_level_results()}
        for stmt in doc.statements:
            if stmt.kind not in ("range", "rule") or stmt.name not in statuses:
                continue
            for feature in referenced_features(stmt):
                if feature in referencing:
                    referencing[feature].append(statuses[stmt.name])

    cells: dict[str, dict[str, ScorecardCell]] = {}
    for name in features:
        row: dict[str, ScorecardCell] = {}
        row["completeness"] = ScorecardCell(
            completeness_grade(d.missing_fraction(name)), "computed"
        )
        statuses = referencing.get(name, [])
        if statuses:
            passed = sum(1 for s in statuses if s in ("pass", "vacuous"))
            row["consistency"] = ScorecardCell(
                consistency_grade(passed / len(statuses)), "computed"
            )
        for criterion, grade in declared.get(name, {}).items():
            if criterion not in ALL_CRITERIA:
                raise ValueError(f"unknown scorecard criterion {criterion!r}")
            if criterion in COMPUTED_CRITERIA:
                raise ValueError(
                    f"criterion {criterion!r} is computed and cannot be declared"
                )
            row[criterion] = ScorecardCell(grade, "declared")
        cells[name] = row
    return QualityScorecard(features, cells)
