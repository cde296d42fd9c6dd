"""Seeded k-means with Minkowski distances.

Centroids initialize from k distinct data rows. Iterations alternate nearest-
centroid assignment (ties to the lowest centroid index) and mean updates,
stopping when the total centroid movement falls under epsilon or the
iteration cap is hit. An emptied cluster is re-seeded from the point farthest
from its assigned centroid. The recorded objective is the sum of
|x - c|_p^p over assigned centroids, which the assignment step can only
lower; for p=2 (the default) the mean update is the exact per-cluster
minimizer, so the objective history is monotone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KmeansParams:
    k: int
    epsilon: float = 1e-6
    max_iters: int = 100
    seed: int = 0
    minkowski_p: float = 2.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.epsilon < 0 or self.max_iters < 1 or self.minkowski_p <= 0:
            raise ValueError("epsilon >= 0, max_iters >= 1, minkowski_p > 0 required")


@dataclass(frozen=True)
class KmeansModel:
    centroids: np.ndarray
    params: KmeansParams
    iterations: int
    objective_history: tuple[float, ...]

    def assign(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return _assign(X, self.centroids, self.params.minkowski_p)

    # alias: cluster assignment is this model's prediction
    predict = assign


def _pdist(X: np.ndarray, centroids: np.ndarray, p: float) -> np.ndarray:
    return (np.abs(X[:, None, :] - centroids[None, :, :]) ** p).sum(axis=2)


def _assign(X: np.ndarray, centroids: np.ndarray, p: float) -> np.ndarray:
    return np.argmin(_pdist(X, centroids, p), axis=1)  # first minimum: lowest index


def kmeans(X, params: KmeansParams) -> KmeansModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    distinct = np.unique(X, axis=0)
    if params.k > distinct.shape[0]:
        raise ValueError(
            f"k={params.k} exceeds the {distinct.shape[0]} distinct rows"
        )
    rng = np.random.default_rng(params.seed)
    chosen = rng.choice(distinct.shape[0], size=params.k, replace=False)
    centroids = distinct[chosen].copy()

    history = []
    iterations = 0
    for iterations in range(1, params.max_iters + 1):
        powers = _pdist(X, centroids, params.minkowski_p)
        labels = np.argmin(powers, axis=1)
        history.append(float(powers[np.arange(X.shape[0]), labels].sum()))

        new_centroids = centroids.copy()
        for j in range(params.k):
            members = labels == j
            if members.any():
                new_centroids[j] = X[members].mean(axis=0)
            else:
                # re-seed an empty cluster from the farthest point
                per_row = powers[np.arange(X.shape[0]), labels]
                new_centroids[j] = X[int(np.argmax(per_row))]
        per_centroid = (np.abs(centroids - new_centroids) ** params.minkowski_p).sum(axis=1)
        movement = float((per_centroid ** (1.0 / params.minkowski_p)).sum())
        centroids = new_centroids
        if movement < params.epsilon:
            break
    return KmeansModel(centroids, params, iterations, tuple(history))
