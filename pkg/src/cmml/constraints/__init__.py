"""Declarative data-requirements language: parsing, evaluation, scoring."""

from .nodes import (
    Agg,
    AggCmp,
    And,
    Bound,
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
    pretty_print,
    referenced_features,
)
from .parser import ConstraintSyntaxError, parse
from .evaluate import (
    ConstraintEvalError,
    StatementResult,
    ViolationReport,
    derive_features,
    evaluate,
)
from .scorecard import (
    ALL_CRITERIA,
    COMPUTED_CRITERIA,
    CRITERIA_GROUPS,
    CRITERIA_LABELS,
    GRADES,
    QualityScorecard,
    ScorecardCell,
    completeness_grade,
    consistency_grade,
    quality_scorecard,
)

__all__ = [
    "Agg", "AggCmp", "And", "Bound", "Cmp", "ConstraintDoc", "DeriveStmt",
    "FeatureRef", "Frac", "Implies", "InvariantStmt", "MissingPred", "Not",
    "Number", "Or", "RangeStmt", "RuleStmt", "pretty_print", "referenced_features",
    "ConstraintSyntaxError", "parse",
    "ConstraintEvalError", "StatementResult", "ViolationReport",
    "derive_features", "evaluate",
    "ALL_CRITERIA", "COMPUTED_CRITERIA", "CRITERIA_GROUPS", "CRITERIA_LABELS",
    "GRADES", "QualityScorecard", "ScorecardCell", "completeness_grade",
    "consistency_grade", "quality_scorecard",
]
