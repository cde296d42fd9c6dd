"""Metrics, resampling validation, grid search and performance gates.

Metrics with a zero denominator are None ("undefined"), never silently 0 —
a gate on an undefined metric counts as violated. Cross-validation re-fits
the engineering recipe inside every fold by default so no statistic leaks
from held-out rows; models that want standardized inputs (logistic, linear,
KNN) z-score the training matrix internally per fit for the same reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .tabular import Dataset
from .engineering import EngineeringRecipe, FittedRecipe, fit_recipe
from .learners import (
    AdaBoostParams,
    CartParams,
    GbmParams,
    GDConfig,
    KnnParams,
    fit_adaboost,
    fit_cart,
    fit_gbm,
    fit_knn,
    fit_logistic,
    fit_linear,
)


# -- confusion matrix and metric set -------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(y_true, y_pred) -> ConfusionMatrix:
    """Count the four binary outcomes; class 1 is positive."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("cannot build a confusion matrix from no predictions")
    return ConfusionMatrix(
        tp=int(((y_true == 1) & (y_pred == 1)).sum()),
        fp=int(((y_true == 0) & (y_pred == 1)).sum()),
        tn=int(((y_true == 0) & (y_pred == 0)).sum()),
        fn=int(((y_true == 1) & (y_pred == 0)).sum()),
    )


@dataclass(frozen=True)
class MetricSet:
    """Classification and regression metrics; None marks undefined."""

    sensitivity: Optional[float] = None
    specificity: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    accuracy: Optional[float] = None
    auc: Optional[float] = None
    r2: Optional[float] = None
    mse: Optional[float] = None
    mae: Optional[float] = None

    def get(self, name: str) -> Optional[float]:
        if not hasattr(self, name):
            raise KeyError(f"unknown metric {name!r}")
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {
            name: getattr(self, name)
            for name in ("sensitivity", "specificity", "precision", "recall",
                         "f1", "accuracy", "auc", "r2", "mse", "mae")
        }


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den > 0 else None


def classification_metrics(cm: ConfusionMatrix, auc: Optional[float] = None) -> MetricSet:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    sensitivity = _ratio(cm.tp, cm.tp + cm.fn)
    specificity = _ratio(cm.tn, cm.tn + cm.fp)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = sensitivity
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = None
    return MetricSet(
        sensitivity=sensitivity,
        specificity=specificity,
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=(cm.tp + cm.tn) / cm.total,
        auc=auc,
    )


def regression_metrics(y_true, y_pred) -> MetricSet:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    residual = y_true - y_pred
    r2_value = None
    if y_true.size >= 2 and np.var(y_true) > 0:
        r2_value = r2(y_true, y_pred)
    return MetricSet(
        r2=r2_value,
        mse=float(np.mean(residual ** 2)),
        mae=float(np.mean(np.abs(residual))),
    )


# -- distribution divergences ------------------------------------------------------


_Q_CLIP = 1e-12


def cross_entropy_kl(p, q) -> tuple[float, float]:
    """Cross entropy H(p, q) and the divergence KL(p || q), both in nats.

    Both distributions must sum to 1 within 1e-9; q is clipped away from zero
    before the logs. Terms with p_k = 0 contribute zero. The identity
    KL = H(p,q) - H(p) holds by construction.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    for name, dist in (("p", p), ("q", q)):
        if (dist < 0).any():
            raise ValueError(f"{name} has negative entries")
        if abs(dist.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} must sum to 1, got {dist.sum()!r}")
    q = np.clip(q, _Q_CLIP, None)
    nz = p > 0
    h_pq = float(-(p[nz] * np.log(q[nz])).sum())
    kl = float((p[nz] * np.log(p[nz] / q[nz])).sum())
    return h_pq, kl


def r2(y_true, y_pred) -> float:
    """Coefficient of determination, 1 - SSR/SST."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.size < 2:
        raise ValueError("r2 needs at least two observations")
    sst = float(((y_true - y_true.mean()) ** 2).sum())
    if sst == 0:
        raise ValueError("r2 undefined for a constant target")
    ssr = float(((y_true - y_pred) ** 2).sum())
    return 1.0 - ssr / sst


def auc_score(y_true, scores) -> Optional[float]:
    """Rank-statistic AUC with average ranks on tied scores."""
    y_true = np.asarray(y_true, dtype=int)
    scores = np.asarray(scores, dtype=float)
    n_pos = int((y_true == 1).sum())
    n_neg = int((y_true == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=float)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i: j + 1]] = (i + j) / 2 + 1  # average rank, 1-based
        i = j + 1
    rank_sum = float(ranks[y_true == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


# -- model specs ------------------------------------------------------------------

CLASSIFIER_KINDS = ("logistic", "cart", "adaboost", "gbm", "knn")
_STANDARDIZED_KINDS = ("logistic", "linear", "knn")


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model description: kind plus hyperparameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CLASSIFIER_KINDS + ("linear",):
            raise ValueError(f"unknown model kind {self.kind!r}")

    def label(self) -> str:
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({inner})"

    @property
    def standardizes(self) -> bool:
        return self.kind in _STANDARDIZED_KINDS

    def complexity_key(self) -> tuple:
        """Tie-break key: fewer boosting rounds, then shallower trees."""
        rounds = self.params.get("n_trees", self.params.get("rounds", 0))
        depth = self.params.get("max_depth", 0)
        return (rounds, depth)

    @staticmethod
    def from_dict(raw: dict) -> "ModelSpec":
        raw = dict(raw)
        kind = raw.pop("model", None) or raw.pop("kind", None)
        if kind is None:
            raise ValueError(f"model spec needs a 'model' key: {raw}")
        return ModelSpec(kind, raw)


class FittedModel:
    """A trained model plus the optional internal standardizer."""

    def __init__(self, spec: ModelSpec, model, scaler=None):
        self.spec = spec
        self.model = model
        self.scaler = scaler  # (mean, std) arrays or None

    def _prepare(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.scaler is not None:
            mean, std = self.scaler
            X = (X - mean) / std
        return X

    def predict(self, X) -> np.ndarray:
        X = self._prepare(X)
        if self.spec.kind == "adaboost":
            return ((self.model.predict(X) + 1) // 2).astype(int)  # back to 0/1
        return self.model.predict(X)

    def predict_proba(self, X) -> Optional[np.ndarray]:
        if self.spec.kind not in ("logistic", "gbm"):
            return None
        return self.model.predict_proba(self._prepare(X))


def _standardizer(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1) if X.shape[0] >= 2 else np.ones(X.shape[1])
    std = np.where(std > 0, std, 1.0)  # constant columns pass through unscaled
    return mean, std


def fit_model(spec: ModelSpec, X: np.ndarray, y: np.ndarray, seed: int) -> FittedModel:
    """Train one model from its spec. Classification labels are 0/1."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    scaler = None
    if spec.standardizes:
        scaler = _standardizer(X)
        X = (X - scaler[0]) / scaler[1]
    p = dict(spec.params)
    if spec.kind == "logistic":
        cfg = GDConfig(
            step_size=p.get("step_size", 0.5),
            max_iters=p.get("max_iters", 1500),
            tolerance=p.get("tolerance", 1e-7),
            l1_penalty=p.get("l1_penalty", 0.0),
            l2_penalty=p.get("l2_penalty", 0.0),
            seed=seed,
        )
        model = fit_logistic(X, y.astype(float), cfg, threshold=p.get("threshold", 0.5))
    elif spec.kind == "linear":
        cfg = GDConfig(
            step_size=p.get("step_size", 0.1),
            max_iters=p.get("max_iters", 2000),
            tolerance=p.get("tolerance", 1e-9),
            l1_penalty=p.get("l1_penalty", 0.0),
            l2_penalty=p.get("l2_penalty", 0.0),
            seed=seed,
        )
        model = fit_linear(X, y.astype(float), cfg)
    elif spec.kind == "cart":
        model = fit_cart(
            X,
            y.astype(int),
            CartParams(
                max_depth=p.get("max_depth", 5),
                min_samples_leaf=p.get("min_samples_leaf", 1),
                impurity=p.get("impurity", "gini"),
            ),
        )
    elif spec.kind == "adaboost":
        labels = 2 * y.astype(int) - 1
        model = fit_adaboost(X, labels, AdaBoostParams(rounds=p.get("rounds", 20), seed=seed))
    elif spec.kind == "gbm":
        model = fit_gbm(
            X,
            y.astype(float),
            GbmParams(
                n_trees=p.get("n_trees", 100),
                max_depth=p.get("max_depth", 3),
                learning_rate=p.get("learning_rate", 0.1),
                task=p.get("task", "binary"),
            ),
        )
    elif spec.kind == "knn":
        model = fit_knn(
            X, y.astype(int), KnnParams(k=p.get("k", 5), minkowski_p=p.get("minkowski_p", 2.0))
        )
    else:
        raise ValueError(f"unknown model kind {spec.kind!r}")
    return FittedModel(spec, model, scaler)


def evaluate_classifier(fitted: FittedModel, X, y) -> MetricSet:
    predictions = fitted.predict(X)
    scores = fitted.predict_proba(X)
    auc = auc_score(y, scores) if scores is not None else None
    return classification_metrics(confusion(y, predictions), auc)


# -- k-fold cross-validation ----------------------------------------------------


@dataclass(frozen=True)
class CVResult:
    folds: tuple[MetricSet, ...]
    mean: MetricSet
    std: MetricSet
    fold_sizes: tuple[int, ...]
    leak_free: bool = True


def _aggregate_metricsets(sets: Sequence[MetricSet]) -> tuple[MetricSet, MetricSet]:
    means, stds = {}, {}
    for name in MetricSet().to_dict():
        values = [s.get(name) for s in sets if s.get(name) is not None]
        if not values:
            means[name] = None
            stds[name] = None
            continue
        means[name] = float(np.mean(values))
        stds[name] = float(np.std(values, ddof=1)) if len(values) >= 2 else 0.0
    return MetricSet(**means), MetricSet(**stds)


def _fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [np.sort(part) for part in np.array_split(rng.permutation(n), k)]


def _matrices(train: Dataset, test: Dataset, recipe, doc, target: str):
    """Fit the recipe on the training rows only, apply to both sides."""
    fitted = None
    if recipe is not None:
        train, fitted = fit_recipe(train, recipe, doc)
        test = fitted.transform(test, doc)
    names = [n for n in train.input_feature_names() if n != target]
    X_train = train.to_matrix(names)
    X_test = test.to_matrix(names)
    y_train = np.array(train.column(target), dtype=float)
    y_test = np.array(test.column(target), dtype=float)
    return X_train, y_train, X_test, y_test, fitted


def kfold_cv(
    d: Dataset,
    spec: ModelSpec,
    recipe: Optional[EngineeringRecipe],
    k: int,
    seed: int,
    target: Optional[str] = None,
    doc=None,
) -> CVResult:
    """Seeded k-fold evaluation; fold sizes differ by at most one row.

    The recipe's statistics are re-fit on the k-1 training folds of every
    round and applied to the held-out fold.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > d.n_rows:
        raise ValueError(f"cannot make {k} folds from {d.n_rows} rows")
    target = target or d.target_name()
    folds = _fold_indices(d.n_rows, k, seed)
    all_rows = np.arange(d.n_rows)
    results = []
    for fold_number, holdout in enumerate(folds):
        train_rows = np.setdiff1d(all_rows, holdout)
        train = d.select_rows(list(train_rows))
        test = d.select_rows(list(holdout))
        X_train, y_train, X_test, y_test, _ = _matrices(train, test, recipe, doc, target)
        fitted = fit_model(spec, X_train, y_train.astype(int), seed + fold_number)
        results.append(evaluate_classifier(fitted, X_test, y_test.astype(int)))
    mean, std = _aggregate_metricsets(results)
    return CVResult(tuple(results), mean, std, tuple(len(f) for f in folds))


# -- bootstrap ------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapResult:
    samples: tuple[MetricSet, ...]
    mean: MetricSet
    std: MetricSet
    skipped_iterations: int
    oob_sizes: tuple[int, ...] = ()
    unique_fractions: tuple[float, ...] = ()


def bootstrap_eval(
    d: Dataset,
    spec: ModelSpec,
    B: int,
    seed: int,
    recipe: Optional[EngineeringRecipe] = None,
    target: Optional[str] = None,
    doc=None,
) -> BootstrapResult:
    """Train on n-row resamples, evaluate on the out-of-bag rows.

    Iterations whose resample covers every row (empty out-of-bag set) are
    skipped and counted.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    target = target or d.target_name()
    rng = np.random.default_rng(seed)
    n = d.n_rows
    samples = []
    skipped = 0
    oob_sizes = []
    unique_fractions = []
    for b in range(B):
        draw = rng.integers(0, n, size=n)
        unique = np.unique(draw)
        unique_fractions.append(unique.size / n)
        oob = np.setdiff1d(np.arange(n), unique)
        if oob.size == 0:
            skipped += 1
            continue
        oob_sizes.append(int(oob.size))
        train = d.select_rows(list(draw))
        test = d.select_rows(list(oob))
        X_train, y_train, X_test, y_test, _ = _matrices(train, test, recipe, doc, target)
        fitted = fit_model(spec, X_train, y_train.astype(int), seed + b)
        samples.append(evaluate_classifier(fitted, X_test, y_test.astype(int)))
    if not samples:
        raise ValueError("every bootstrap iteration had an empty out-of-bag set")
    mean, std = _aggregate_metricsets(samples)
    return BootstrapResult(
        tuple(samples), mean, std, skipped, tuple(oob_sizes), tuple(unique_fractions)
    )


# -- grid search ------------------------------------------------------------------


@dataclass(frozen=True)
class LeaderboardRow:
    spec: ModelSpec
    cv: CVResult
    grid_index: int
    standardized: bool


@dataclass(frozen=True)
class GridResult:
    best: LeaderboardRow
    leaderboard: tuple[LeaderboardRow, ...]  # sorted, best first
    selection_metric: str


def grid_search(
    d: Dataset,
    grid: Sequence[ModelSpec],
    selection_metric: str,
    k: int,
    seed: int,
    recipe: Optional[EngineeringRecipe] = None,
    target: Optional[str] = None,
    doc=None,
) -> GridResult:
    """Exhaustive evaluation of every spec by k-fold CV.

    Best is the highest mean selection metric; ties prefer fewer boosting
    rounds, then shallower trees, then the lower grid index. An undefined
    mean metric sorts below every defined one.
    """
    if not grid:
        raise ValueError("model grid is empty")
    rows = []
    for index, spec in enumerate(grid):
        cv = kfold_cv(d, spec, recipe, k, seed, target=target, doc=doc)
        rows.append(LeaderboardRow(spec, cv, index, spec.standardizes))

    def sort_key(row: LeaderboardRow):
        score = row.cv.mean.get(selection_metric)
        defined = score is not None
        rounds, depth = row.spec.complexity_key()
        return (not defined, -(score if defined else 0.0), rounds, depth, row.grid_index)

    ordered = tuple(sorted(rows, key=sort_key))
    return GridResult(ordered[0], ordered, selection_metric)


# -- performance gates --------------------------------------------------------------


_COMPARATORS = {
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


@dataclass(frozen=True)
class PerformanceGate:
    metric: str
    comparator: str
    threshold: float
    severity: str = "hard"  # or "soft"

    def __post_init__(self):
        if self.comparator not in _COMPARATORS:
            raise ValueError(f"unknown comparator {self.comparator!r}")
        if self.severity not in ("hard", "soft"):
            raise ValueError(f"severity must be hard or soft, got {self.severity!r}")

    def describe(self) -> str:
        return f"{self.metric} {self.comparator} {self.threshold} ({self.severity})"

    def satisfied_by(self, metrics: MetricSet) -> bool:
        value = metrics.get(self.metric)
        if value is None:
            return False  # an undefined metric violates any gate on it
        return _COMPARATORS[self.comparator](value, self.threshold)


@dataclass(frozen=True)
class GateOutcome:
    passed: bool
    violated_hard: tuple[PerformanceGate, ...]
    violated_soft: tuple[PerformanceGate, ...]

    def describe(self) -> str:
        if self.passed and not self.violated_soft:
            return "all gates passed"
        if self.passed:
            soft = "; ".join(g.describe() for g in self.violated_soft)
            return f"passed with warnings: {soft}"
        hard = "; ".join(g.describe() for g in self.violated_hard)
        return f"failed: {hard}"


def gate_check(metrics: MetricSet, gates: Sequence[PerformanceGate]) -> GateOutcome:
    """Hard violations fail the check; soft ones pass with warnings."""
    hard = tuple(g for g in gates if g.severity == "hard" and not g.satisfied_by(metrics))
    soft = tuple(g for g in gates if g.severity == "soft" and not g.satisfied_by(metrics))
    return GateOutcome(not hard, hard, soft)


# -- capacity diagnostics -------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    label: str
    train_loss: float
    test_loss: float


def fit_curve(
    d: Dataset,
    family: Sequence[ModelSpec],
    seed: int,
    recipe: Optional[EngineeringRecipe] = None,
    target: Optional[str] = None,
    doc=None,
    test_fraction: float = 0.25,
) -> tuple[CurvePoint, ...]:
    """Train/test misclassification per capacity point on one seeded split.

    The family must be ordered by increasing capacity; at least two points.
    """
    if len(family) < 2:
        raise ValueError("capacity axis needs at least two points")
    target = target or d.target_name()
    rng = np.random.default_rng(seed)
    perm = rng.permutation(d.n_rows)
    cut = int(round(d.n_rows * (1 - test_fraction)))
    train = d.select_rows(list(perm[:cut]))
    test = d.select_rows(list(perm[cut:]))
    X_train, y_train, X_test, y_test, _ = _matrices(train, test, recipe, doc, target)
    points = []
    for spec in family:
        fitted = fit_model(spec, X_train, y_train.astype(int), seed)
        train_err = float(np.mean(fitted.predict(X_train) != y_train.astype(int)))
        test_err = float(np.mean(fitted.predict(X_test) != y_test.astype(int)))
        points.append(CurvePoint(spec.label(), train_err, test_err))
    return tuple(points)
