"""Gradient boosting over regression trees.

Regression starts from the target mean and repeatedly fits a squared-loss
tree to the residuals r = y - F(x); each tree's leaves already hold the mean
residual, and its contribution is scaled by the learning rate. The binary
task starts from the log odds of the positive class, fits trees to
r = y - sigmoid(F(x)), and refits each leaf with the one-step Newton value
sum(r) / sum(p (1 - p)) over the samples it captured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cart import CartModel, CartParams, fit_cart
from .linear import sigmoid

_NEWTON_EPS = 1e-12


@dataclass(frozen=True)
class GbmParams:
    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    task: str = "regression"  # or "binary"

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.task not in ("regression", "binary"):
            raise ValueError(f"unknown task {self.task!r}")


@dataclass(frozen=True)
class GbmModel:
    init: float
    trees: tuple[CartModel, ...]
    params: GbmParams

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        score = np.full(X.shape[0], self.init)
        for tree in self.trees:
            score += self.params.learning_rate * tree.predict(X)
        return score

    def predict_proba(self, X) -> np.ndarray:
        if self.params.task != "binary":
            raise ValueError("probabilities are only defined for the binary task")
        return sigmoid(self.decision(X))

    def predict(self, X) -> np.ndarray:
        if self.params.task == "binary":
            return (self.predict_proba(X) >= 0.5).astype(int)
        return self.decision(X)


def fit_gbm(X, y, params: GbmParams) -> GbmModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per target value")
    tree_params = CartParams(max_depth=params.max_depth, min_samples_leaf=1, impurity="squared")

    if params.task == "binary":
        labels = set(np.unique(y))
        if not labels <= {0.0, 1.0}:
            raise ValueError(f"binary task needs 0/1 labels, got {sorted(labels)}")
        if len(labels) < 2:
            raise ValueError("binary task needs both classes present")
        positive = float(np.mean(y))
        init = float(np.log(positive / (1.0 - positive)))
    else:
        init = float(np.mean(y))

    score = np.full(X.shape[0], init)
    trees = []
    for _ in range(params.n_trees):
        if params.task == "binary":
            p = sigmoid(score)
            residuals = y - p
        else:
            residuals = y - score
        tree = fit_cart(X, residuals, tree_params)
        if params.task == "binary":
            # one-step Newton leaf values on the logit scale
            leaf_ids = tree.apply(X)
            leaves = tree.leaves()
            hessian = p * (1.0 - p)
            for leaf_index, leaf in enumerate(leaves):
                in_leaf = leaf_ids == leaf_index
                if not in_leaf.any():
                    continue
                denom = max(float(hessian[in_leaf].sum()), _NEWTON_EPS)
                leaf.value = float(residuals[in_leaf].sum()) / denom
        score = score + params.learning_rate * tree.predict(X)
        trees.append(tree)
    return GbmModel(init, tuple(trees), params)
