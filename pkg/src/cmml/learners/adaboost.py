"""Boosted decision stumps with weight-driven resampling.

Each round fits the single best stump (one split, two leaves) on the current
working set by smallest weighted Gini, scores it on that same set, reweights
the samples by e^{+alpha} (misclassified) / e^{-alpha} (correct), draws a new
working set of n rows with replacement using the normalized weights as
probabilities, and resets the weights to equal before the next round. The
ensemble predicts the sign of the alpha-weighted stump votes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cart import CartParams, find_best_split

_ERROR_CLAMP = 1e-10


@dataclass(frozen=True)
class Stump:
    """value <= threshold predicts ``left_label``, otherwise ``right_label``.

    A degenerate stump (no usable split anywhere) has feature -1 and predicts
    ``left_label`` everywhere.
    """

    feature: int
    threshold: float
    left_label: int  # in {-1, +1}
    right_label: int

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.feature < 0:
            return np.full(X.shape[0], self.left_label)
        return np.where(X[:, self.feature] <= self.threshold, self.left_label, self.right_label)


@dataclass(frozen=True)
class AdaBoostParams:
    rounds: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")


@dataclass(frozen=True)
class RoundRecord:
    stump: Stump
    alpha: float
    error: float


@dataclass(frozen=True)
class AdaBoostModel:
    rounds: tuple[RoundRecord, ...]
    params: AdaBoostParams

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        score = np.zeros(X.shape[0])
        for record in self.rounds:
            score += record.alpha * record.stump.predict(X)
        return score

    def predict(self, X) -> np.ndarray:
        # sign with the 0 boundary mapped to +1, for determinism
        return np.where(self.decision(X) >= 0, 1, -1)


def _weighted_majority(y: np.ndarray, w: np.ndarray) -> int:
    plus = w[y == 1].sum()
    minus = w[y == -1].sum()
    if plus == minus:
        return -1  # tie goes to the lower class
    return 1 if plus > minus else -1


def fit_stump(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> Stump:
    """Best one-split classifier by smallest weighted Gini of the children."""
    encoded = ((y + 1) // 2).astype(int)  # -1/+1 -> 0/1 class indices
    split = find_best_split(
        X, encoded, CartParams(max_depth=1, min_samples_leaf=1, impurity="gini"), sample_weight=w
    )
    if split is None:
        return Stump(-1, 0.0, _weighted_majority(y, w), _weighted_majority(y, w))
    mask = X[:, split.feature] <= split.threshold
    left = _weighted_majority(y[mask], w[mask])
    right = _weighted_majority(y[~mask], w[~mask])
    return Stump(split.feature, float(split.threshold), left, right)


def weighted_error(stump: Stump, X, y, w) -> float:
    predictions = stump.predict(X)
    return float(w[predictions != y].sum() / w.sum())


def fit_adaboost(X, y, params: AdaBoostParams) -> AdaBoostModel:
    """Train ``rounds`` stumps with the update -> resample -> reset cycle."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if set(np.unique(y)) - {-1, 1}:
        raise ValueError("labels must be -1/+1")
    n = X.shape[0]
    rng = np.random.default_rng(params.seed)

    work_X, work_y = X, y
    records = []
    for _ in range(params.rounds):
        w = np.full(n, 1.0 / n)
        stump = fit_stump(work_X, work_y, w)
        error = weighted_error(stump, work_X, work_y, w)
        clamped = min(max(error, _ERROR_CLAMP), 1.0 - _ERROR_CLAMP)
        alpha = float(np.log((1.0 - clamped) / clamped))
        records.append(RoundRecord(stump, alpha, error))

        predictions = stump.predict(work_X)
        w = np.where(predictions != work_y, w * np.exp(alpha), w * np.exp(-alpha))
        w = w / w.sum()
        draw = rng.choice(n, size=n, replace=True, p=w)
        work_X, work_y = work_X[draw], work_y[draw]
    return AdaBoostModel(tuple(records), params)
