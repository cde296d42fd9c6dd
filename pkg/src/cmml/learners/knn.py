"""k-nearest-neighbor classification with a weighted Minkowski distance.

The stored model is the training data itself. Distances are weighted sums of
per-dimension terms |x_f - q_f|^p with normalized dimension weights (equal by
default), which ranks neighbors identically to the Minkowski p-norm. Votes
tie-break by smaller summed distance, then by lower class label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class KnnParams:
    k: int = 5
    minkowski_p: float = 2.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.minkowski_p <= 0:
            raise ValueError("minkowski_p must be positive")


@dataclass(frozen=True)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    params: KnnParams
    feature_weights: np.ndarray

    def _distances(self, queries: np.ndarray) -> np.ndarray:
        diffs = np.abs(queries[:, None, :] - self.X[None, :, :]) ** self.params.minkowski_p
        return diffs @ self.feature_weights

    def predict(self, X) -> np.ndarray:
        queries = np.atleast_2d(np.asarray(X, dtype=float))
        distances = self._distances(queries)
        k = self.params.k
        out = np.empty(queries.shape[0], dtype=self.y.dtype)
        for i in range(queries.shape[0]):
            # stable sort: equal distances resolve to lower training row index
            nearest = np.argsort(distances[i], kind="stable")[:k]
            labels = self.y[nearest]
            dists = distances[i][nearest]
            candidates = {}
            for label in np.unique(labels):
                mask = labels == label
                candidates[label] = (int(mask.sum()), float(dists[mask].sum()))
            # most votes; ties -> smaller summed distance -> lower label
            out[i] = min(candidates, key=lambda c: (-candidates[c][0], candidates[c][1], c))
        return out


def fit_knn(X, y, params: KnnParams, feature_weights: Optional[np.ndarray] = None) -> KnnModel:
    """Lazy fit: validates and stores the data. k may not exceed n."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per label")
    if params.k > X.shape[0]:
        raise ValueError(f"k={params.k} exceeds the {X.shape[0]} stored rows")
    if feature_weights is None:
        weights = np.full(X.shape[1], 1.0 / X.shape[1])
    else:
        weights = np.asarray(feature_weights, dtype=float)
        if weights.shape != (X.shape[1],) or (weights < 0).any() or weights.sum() <= 0:
            raise ValueError("feature_weights must be non-negative with positive sum")
        weights = weights / weights.sum()
    return KnnModel(X, y, params, weights)
