"""Data preparation: imputation, scaling, one-hot encoding, derived features.

Transforms come in two flavors. The plain functions (``impute``, ``scale``,
``one_hot``) are one-shot dataset operations. ``fit_recipe`` runs an ordered
recipe and captures every statistic it computed (imputation values, scale
parameters, one-hot vocabularies) in a ``FittedRecipe`` whose ``transform``
replays the same steps on new data — so cross-validation and batch prediction
never leak statistics from data they must not see.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .tabular import Dataset, FeatureMeta, MISSING, mark_missing_zeros
from .constraints import ConstraintDoc, derive_features

STRATEGIES = ("mean", "median", "most_frequent", "constant")
SCALE_METHODS = ("minmax", "zscore")

# hereditary-risk score constants: diagnosis-age ceiling/floor and moderators
_DPF_AGE_CEIL = 88.0
_DPF_AGE_FLOOR = 14.0
_DPF_NUM_MODERATOR = 20.0
_DPF_DEN_MODERATOR = 50.0

GENE_SHARE = {
    "parent_or_full_sibling": 0.5,
    "half_sibling_grandparent_aunt_uncle": 0.25,
    "half_aunt_half_uncle_cousin": 0.125,
}


# -- single transforms ---------------------------------------------------------


def _impute_value(values, strategy: str, constant=None):
    if strategy == "constant":
        return constant
    if strategy == "most_frequent":
        counts: dict = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        best = max(counts.values())
        # deterministic tie-break: smallest value (numeric) / first token (lexicographic)
        candidates = sorted(k for k, c in counts.items() if c == best)
        return candidates[0]
    arr = np.array(values, dtype=float)
    return float(np.mean(arr)) if strategy == "mean" else float(np.median(arr))


def impute(d: Dataset, feature: str, strategy: str, constant=None) -> Dataset:
    """Replace every MISSING cell of one feature.

    mean/median need a numeric feature; most_frequent and constant work for
    any kind. The statistic is computed over the non-missing cells of the
    dataset passed in. Non-missing cells are never altered.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown imputation strategy {strategy!r}")
    meta = d.feature(feature)
    if strategy in ("mean", "median") and meta.kind == "categorical":
        raise ValueError(f"{strategy} imputation needs a numeric feature, {feature!r} is categorical")
    col = d.column(feature)
    present = [v for v in col if v is not MISSING]
    if not present and strategy != "constant":
        raise ValueError(f"feature {feature!r} is entirely missing, no statistic to impute with")
    value = _impute_value(present, strategy, constant)
    return _fill_missing(d, feature, value)


def _fill_missing(d: Dataset, feature: str, value) -> Dataset:
    col = d.column(feature)
    if not any(v is MISSING for v in col):
        return d
    meta = d.feature(feature)
    if meta.kind == "binary" and value not in (0, 1, 0.0, 1.0):
        # a mean/median fill can produce a fractional value; widen the kind
        from dataclasses import replace
        meta = replace(meta, kind="numeric")
        return d.replace_column(feature, (value if v is MISSING else v for v in col), meta)
    return d.replace_column(feature, (value if v is MISSING else v for v in col))


@dataclass(frozen=True)
class ScaleParams:
    """Fitted scaling statistics, reusable on out-of-sample data."""

    method: str
    stats: dict  # feature -> (min, max) for minmax, (mean, std) for zscore

    def transform_value(self, feature: str, value: float) -> float:
        a, b = self.stats[feature]
        if self.method == "minmax":
            return (value - a) / (b - a)
        return (value - a) / b

    def transform(self, d: Dataset) -> Dataset:
        result = d
        for feature in self.stats:
            col = result.column(feature)
            new = tuple(
                MISSING if v is MISSING else self.transform_value(feature, v) for v in col
            )
            meta = result.feature(feature)
            if meta.kind == "binary":
                from dataclasses import replace
                meta = replace(meta, kind="numeric")
                result = result.replace_column(feature, new, meta)
            else:
                result = result.replace_column(feature, new)
        return result


def scale(d: Dataset, features: Sequence[str], method: str) -> tuple[Dataset, ScaleParams]:
    """Fit and apply min-max ([0,1]) or z-score scaling to numeric features.

    Features must have no missing cells. Constant features are an error for
    both methods (zero range / zero std).
    """
    if method not in SCALE_METHODS:
        raise ValueError(f"unknown scaling method {method!r}")
    stats = {}
    for name in features:
        meta = d.feature(name)
        if meta.kind == "categorical":
            raise ValueError(f"cannot scale categorical feature {name!r}")
        col = d.column(name)
        if any(v is MISSING for v in col):
            raise ValueError(f"feature {name!r} has missing cells, impute before scaling")
        values = np.array(col, dtype=float)
        if method == "minmax":
            lo, hi = float(values.min()), float(values.max())
            if hi == lo:
                raise ValueError(f"feature {name!r} is constant, min-max scaling undefined")
            stats[name] = (lo, hi)
        else:
            mean = float(np.mean(values))
            std = float(np.std(values, ddof=1)) if values.size >= 2 else 0.0
            if std == 0:
                raise ValueError(f"feature {name!r} has zero variance, z-scoring undefined")
            stats[name] = (mean, std)
    params = ScaleParams(method, stats)
    return params.transform(d), params


def one_hot(d: Dataset, feature: str) -> Dataset:
    """Expand a categorical feature into per-category binary features.

    New features are named ``feature=token`` in lexicographic token order;
    the source feature's role becomes excluded. Rows with a MISSING source
    get MISSING in every new cell.
    """
    return _one_hot_with_vocab(d, feature, None)[0]


def _one_hot_with_vocab(d: Dataset, feature: str, vocab: Optional[tuple[str, ...]]):
    meta = d.feature(feature)
    if meta.kind != "categorical":
        raise ValueError(f"one-hot encoding needs a categorical feature, {feature!r} is {meta.kind}")
    col = d.column(feature)
    if vocab is None:
        vocab = tuple(sorted({v for v in col if v is not MISSING}))
    result = d.set_role(feature, "excluded")
    for token in vocab:
        cells = tuple(
            MISSING if v is MISSING else float(v == token) for v in col
        )
        result = result.add_column(
            FeatureMeta(name=f"{feature}={token}", kind="binary", role="input"), cells
        )
    return result, vocab


# -- recipes -----------------------------------------------------------------------


@dataclass(frozen=True)
class RecipeStep:
    """One declarative preparation step.

    op: mark_zeros | impute | scale | one_hot | derive_from_constraints
    """

    op: str
    features: tuple[str, ...] = ()
    strategy: Optional[str] = None  # impute
    constant: Optional[float] = None  # impute constant(c)
    method: Optional[str] = None  # scale

    def to_dict(self) -> dict:
        out: dict = {"op": self.op}
        if self.features:
            out["features"] = list(self.features)
        for key in ("strategy", "constant", "method"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    @staticmethod
    def from_dict(raw: dict) -> "RecipeStep":
        known = {"op", "features", "feature", "strategy", "constant", "method"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown recipe step keys {sorted(unknown)}")
        features = raw.get("features", raw.get("feature", ()))
        if isinstance(features, str):
            features = (features,)
        return RecipeStep(
            op=raw["op"],
            features=tuple(features),
            strategy=raw.get("strategy"),
            constant=raw.get("constant"),
            method=raw.get("method"),
        )


@dataclass(frozen=True)
class EngineeringRecipe:
    steps: tuple[RecipeStep, ...] = ()
    notes: tuple[str, ...] = ()

    @staticmethod
    def from_config(raw: Sequence[dict], notes: Sequence[str] = ()) -> "EngineeringRecipe":
        return EngineeringRecipe(tuple(RecipeStep.from_dict(s) for s in raw), tuple(notes))


@dataclass(frozen=True)
class _FittedStep:
    step: RecipeStep
    state: dict  # statistics captured at fit time


@dataclass(frozen=True)
class FittedRecipe:
    """A recipe plus the statistics it computed on its fitting data."""

    fitted_steps: tuple[_FittedStep, ...]

    def transform(self, d: Dataset, doc: Optional[ConstraintDoc] = None) -> Dataset:
        result = d
        for fs in self.fitted_steps:
            step = fs.step
            if step.op == "mark_zeros":
                result = mark_missing_zeros(result, step.features)
            elif step.op == "impute":
                result = _fill_missing(result, step.features[0], fs.state["value"])
            elif step.op == "scale":
                params = ScaleParams(step.method, fs.state["stats"])
                for name in step.features:
                    col = result.column(name)
                    if any(v is MISSING for v in col):
                        raise ValueError(f"feature {name!r} has missing cells, impute before scaling")
                result = params.transform(result)
            elif step.op == "one_hot":
                result, _ = _one_hot_with_vocab(result, step.features[0], fs.state["vocab"])
            elif step.op == "derive_from_constraints":
                if doc is None:
                    raise ValueError("recipe has a derive step but no constraint doc was given")
                result = derive_features(doc, result)
            else:
                raise ValueError(f"unknown recipe op {step.op!r}")
        return result

    def to_dict(self) -> dict:
        return {
            "steps": [
                {"step": fs.step.to_dict(), "state": _state_to_json(fs.state)}
                for fs in self.fitted_steps
            ]
        }

    @staticmethod
    def from_dict(raw: dict) -> "FittedRecipe":
        steps = tuple(
            _FittedStep(RecipeStep.from_dict(item["step"]), _state_from_json(item["state"]))
            for item in raw["steps"]
        )
        return FittedRecipe(steps)


def _state_to_json(state: dict) -> dict:
    out = {}
    for key, value in state.items():
        if key == "stats":
            out[key] = {k: list(v) for k, v in value.items()}
        elif key == "vocab":
            out[key] = list(value)
        else:
            out[key] = value
    return out


def _state_from_json(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        if key == "stats":
            out[key] = {k: tuple(v) for k, v in value.items()}
        elif key == "vocab":
            out[key] = tuple(value)
        else:
            out[key] = value
    return out


def fit_recipe(
    d: Dataset, recipe: EngineeringRecipe, doc: Optional[ConstraintDoc] = None
) -> tuple[Dataset, FittedRecipe]:
    """Run the recipe on ``d``, capturing fit statistics step by step.

    Each step's statistics come from the dataset as it stands when the step
    runs (so an impute after a mark_zeros sees the marked data).
    """
    result = d
    fitted = []
    for step in recipe.steps:
        if step.op == "mark_zeros":
            result = mark_missing_zeros(result, step.features)
            fitted.append(_FittedStep(step, {}))
        elif step.op == "impute":
            if len(step.features) != 1:
                raise ValueError("impute step takes exactly one feature")
            name = step.features[0]
            meta = result.feature(name)
            if step.strategy in ("mean", "median") and meta.kind == "categorical":
                raise ValueError(
                    f"{step.strategy} imputation needs a numeric feature, {name!r} is categorical"
                )
            present = [v for v in result.column(name) if v is not MISSING]
            if not present and step.strategy != "constant":
                raise ValueError(f"feature {name!r} is entirely missing, no statistic to impute with")
            value = _impute_value(present, step.strategy, step.constant)
            result = _fill_missing(result, name, value)
            fitted.append(_FittedStep(step, {"value": value}))
        elif step.op == "scale":
            result, params = scale(result, step.features, step.method)
            fitted.append(_FittedStep(step, {"stats": params.stats}))
        elif step.op == "one_hot":
            if len(step.features) != 1:
                raise ValueError("one_hot step takes exactly one feature")
            result, vocab = _one_hot_with_vocab(result, step.features[0], None)
            fitted.append(_FittedStep(step, {"vocab": vocab}))
        elif step.op == "derive_from_constraints":
            if doc is None:
                raise ValueError("recipe has a derive step but no constraint doc was given")
            result = derive_features(doc, result)
            fitted.append(_FittedStep(step, {}))
        else:
            raise ValueError(f"unknown recipe op {step.op!r}")
    return result, FittedRecipe(tuple(fitted))


# -- hereditary risk score -----------------------------------------------------------


@dataclass(frozen=True)
class RelativeRecord:
    """One relative's diabetes history for the pedigree score.

    relation_class keys the shared-gene fraction; a diabetic relative carries
    the age at diagnosis (adm_years), a non-diabetic one the age at the last
    non-diabetic exam (acl_years).
    """

    relation_class: str
    diabetic: bool
    adm_years: Optional[float] = None
    acl_years: Optional[float] = None

    def __post_init__(self):
        if self.relation_class not in GENE_SHARE:
            raise ValueError(f"unknown relation class {self.relation_class!r}")
        age = self.adm_years if self.diabetic else self.acl_years
        label = "adm_years" if self.diabetic else "acl_years"
        if age is None:
            raise ValueError(f"{label} is required for this record")
        if not (0 < age < 122):
            raise ValueError(f"{label} must lie in (0, 122), got {age}")

    @property
    def gene_share(self) -> float:
        return GENE_SHARE[self.relation_class]


def dpf(relatives: Sequence[RelativeRecord]) -> float:
    """Diabetes pedigree score over a subject's relatives.

    (sum over diabetic relatives of K*(88 - ADM) + 20) divided by
    (sum over non-diabetic relatives of K*(ACL - 14) + 50). Empty history
    gives 20/50 = 0.4. An ACL below 14 contributes a negative term, as
    defined; the moderating constant keeps realistic inputs positive.
    """
    numerator = _DPF_NUM_MODERATOR
    denominator = _DPF_DEN_MODERATOR
    for rel in relatives:
        if rel.diabetic:
            numerator += rel.gene_share * (_DPF_AGE_CEIL - rel.adm_years)
        else:
            denominator += rel.gene_share * (rel.acl_years - _DPF_AGE_FLOOR)
    return numerator / denominator
