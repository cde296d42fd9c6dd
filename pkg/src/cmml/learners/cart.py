"""Classification and regression trees with exhaustive greedy split search.

At every node each feature is scanned and every midpoint between consecutive
distinct sorted values is a candidate threshold; the split minimizing the
size-weighted child impurity wins. Ties break deterministically: lowest
feature index first, then lowest threshold. Impurities are computed from
integer prefix counts with one fixed expression, so an independent
enumeration oracle reproduces bit-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

IMPURITIES = ("gini", "entropy", "squared")


@dataclass(frozen=True)
class CartParams:
    max_depth: int = 10
    min_samples_leaf: int = 1
    impurity: str = "gini"

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be at least 1")
        if self.impurity not in IMPURITIES:
            raise ValueError(f"unknown impurity {self.impurity!r}")


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    weighted_impurity: float


class Node:
    """One tree node; a leaf when ``feature`` is None. value <= threshold goes left."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "class_counts", "n_samples")

    def __init__(self, value=None, class_counts=None, n_samples=0):
        self.feature: Optional[int] = None
        self.threshold: Optional[float] = None
        self.left: Optional["Node"] = None
        self.right: Optional["Node"] = None
        self.value = value  # predicted class index (classification) or mean (regression)
        self.class_counts = class_counts
        self.n_samples = n_samples

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            out = {"value": self.value, "n_samples": self.n_samples}
            if self.class_counts is not None:
                out["class_counts"] = [int(c) for c in self.class_counts]
            return out
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "n_samples": self.n_samples,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @staticmethod
    def from_dict(raw: dict) -> "Node":
        node = Node()
        node.n_samples = raw.get("n_samples", 0)
        if "feature" in raw:
            node.feature = raw["feature"]
            node.threshold = raw["threshold"]
            node.left = Node.from_dict(raw["left"])
            node.right = Node.from_dict(raw["right"])
        else:
            node.value = raw["value"]
            if "class_counts" in raw:
                node.class_counts = np.array(raw["class_counts"], dtype=float)
        return node


def _child_impurities(left_counts, right_counts, nl, nr, impurity):
    """Per-candidate child impurities from class-count matrices."""
    if impurity == "gini":
        gl = 1.0 - ((left_counts / nl[:, None]) ** 2).sum(axis=1)
        gr = 1.0 - ((right_counts / nr[:, None]) ** 2).sum(axis=1)
        return gl, gr
    pl = left_counts / nl[:, None]
    pr = right_counts / nr[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.where(pl > 0, pl * np.log(pl), 0.0)
        lr = np.where(pr > 0, pr * np.log(pr), 0.0)
    return -ll.sum(axis=1), -lr.sum(axis=1)


def find_best_split(
    X: np.ndarray, y: np.ndarray, params: CartParams, sample_weight=None
) -> Optional[Split]:
    """Exhaustive scan over (feature, midpoint) candidates.

    Returns the argmin split or None when no candidate satisfies the leaf-size
    floor. For classification ``y`` must hold class indices 0..K-1. With
    ``sample_weight`` (classification only) counts become weight sums, which
    is what the boosting stump search needs.
    """
    n = X.shape[0]
    best: Optional[Split] = None
    regression = params.impurity == "squared"
    if not regression:
        n_classes = int(y.max()) + 1 if y.size else 0
        onehot = np.zeros((n, n_classes))
        weights = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        onehot[np.arange(n), y.astype(int)] = weights

    for feature in range(X.shape[1]):
        x = X[:, feature]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        sizes_left = np.arange(1, n)
        sizes_right = n - sizes_left
        candidates = (xs[:-1] < xs[1:]) & (sizes_left >= params.min_samples_leaf) & (
            sizes_right >= params.min_samples_leaf
        )
        if not candidates.any():
            continue
        if regression:
            ys = y[order]
            cum = np.cumsum(ys)
            cum2 = np.cumsum(ys * ys)
            sl, sr = cum[:-1], cum[-1] - cum[:-1]
            ql, qr = cum2[:-1], cum2[-1] - cum2[:-1]
            # mean squared deviation via sum formulas; clip tiny negatives
            il = np.maximum(ql / sizes_left - (sl / sizes_left) ** 2, 0.0)
            ir = np.maximum(qr / sizes_right - (sr / sizes_right) ** 2, 0.0)
        else:
            cum = np.cumsum(onehot[order], axis=0)
            left = cum[:-1]
            right = cum[-1] - cum[:-1]
            wl = left.sum(axis=1)
            wr = right.sum(axis=1)
            safe_l = np.where(wl > 0, wl, 1.0)
            safe_r = np.where(wr > 0, wr, 1.0)
            il, ir = _child_impurities(left, right, safe_l, safe_r, params.impurity)
            if sample_weight is not None:
                # weighted sizes replace row counts in the weighted-mean impurity
                total = wl + wr
                weighted_all = (wl * il + wr * ir) / total
                positions = np.flatnonzero(candidates)
                pos = positions[int(np.argmin(weighted_all[positions]))]
                value = float(weighted_all[pos])
                if best is None or value < best.weighted_impurity:
                    best = Split(feature, float((xs[pos] + xs[pos + 1]) / 2), value)
                continue
        weighted_all = (sizes_left * il + sizes_right * ir) / n
        positions = np.flatnonzero(candidates)
        pos = positions[int(np.argmin(weighted_all[positions]))]
        value = float(weighted_all[pos])
        if best is None or value < best.weighted_impurity:
            best = Split(feature, float((xs[pos] + xs[pos + 1]) / 2), value)
    return best


@dataclass(frozen=True)
class CartModel:
    """Fitted tree. ``classes`` maps internal class indices back to labels."""

    root: Node
    params: CartParams
    classes: Optional[np.ndarray] = None  # None for regression
    n_features: int = 0

    @property
    def task(self) -> str:
        return "regression" if self.classes is None else "classification"

    def _route(self, X: np.ndarray) -> list[Node]:
        X = np.asarray(X, dtype=float)
        out = [None] * X.shape[0]
        stack = [(self.root, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if node.is_leaf:
                for i in idx:
                    out[i] = node
                continue
            mask = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
        return out

    def predict(self, X) -> np.ndarray:
        leaves = self._route(np.atleast_2d(np.asarray(X, dtype=float)))
        values = np.array([leaf.value for leaf in leaves], dtype=float)
        if self.classes is not None:
            return self.classes[values.astype(int)]
        return values

    def apply(self, X) -> np.ndarray:
        """Leaf identity (by preorder index) per row, for leaf-value refitting."""
        index = {id(leaf): i for i, leaf in enumerate(self.leaves())}
        routed = self._route(np.atleast_2d(np.asarray(X, dtype=float)))
        return np.array([index[id(leaf)] for leaf in routed], dtype=int)

    def leaves(self) -> list[Node]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend([node.right, node.left])
        return out

    def depth(self) -> int:
        def walk(node):
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)


def _leaf(y: np.ndarray, regression: bool) -> Node:
    if regression:
        return Node(value=float(np.mean(y)), n_samples=y.size)
    counts = np.bincount(y)
    return Node(value=int(np.argmax(counts)), class_counts=counts.astype(float), n_samples=y.size)


def _pure(y: np.ndarray, regression: bool) -> bool:
    if regression:
        return bool(np.all(y == y[0]))
    return bool((y == y[0]).all())


def _build(X, y, depth, params, regression):
    if (
        depth >= params.max_depth
        or y.size < 2 * params.min_samples_leaf
        or _pure(y, regression)
    ):
        return _leaf(y, regression)
    split = find_best_split(X, y, params)
    if split is None:
        return _leaf(y, regression)
    node = _leaf(y, regression)  # keep node stats for diagnostics
    mask = X[:, split.feature] <= split.threshold
    node.feature = split.feature
    node.threshold = split.threshold
    node.left = _build(X[mask], y[mask], depth + 1, params, regression)
    node.right = _build(X[~mask], y[~mask], depth + 1, params, regression)
    return node


def fit_cart(X, y, params: CartParams) -> CartModel:
    """Greedy recursive partitioning; leaves predict majority class or mean."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.size == 0 or y.size == 0:
        raise ValueError("cannot fit a tree on an empty training set")
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per target value")
    regression = params.impurity == "squared"
    if regression:
        root = _build(X, y.astype(float), 0, params, True)
        return CartModel(root, params, None, X.shape[1])
    classes, encoded = np.unique(y, return_inverse=True)
    root = _build(X, encoded, 0, params, False)
    return CartModel(root, params, classes, X.shape[1])
