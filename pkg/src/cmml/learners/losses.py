"""Loss functions and node-impurity measures.

All losses accept scalars or numpy arrays. Probabilities fed to cross-entropy
are clipped to [1e-12, 1 - 1e-12] rather than raising, so callers can pass
raw model outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

PROB_EPS = 1e-12

LOSS_NAMES = ("squared", "absolute", "huber", "cross_entropy", "hinge")


@dataclass(frozen=True)
class LossKind:
    name: str
    delta: Optional[float] = None  # huber only

    def __post_init__(self):
        if self.name not in LOSS_NAMES:
            raise ValueError(f"unknown loss {self.name!r}")
        if self.name == "huber":
            if self.delta is None or self.delta <= 0:
                raise ValueError("huber loss needs delta > 0")
        elif self.delta is not None:
            raise ValueError(f"{self.name} loss takes no delta")


def squared_loss(prediction, truth):
    r = np.asarray(prediction, dtype=float) - np.asarray(truth, dtype=float)
    return 0.5 * r * r


def absolute_loss(prediction, truth):
    return np.abs(np.asarray(prediction, dtype=float) - np.asarray(truth, dtype=float))


def huber_loss(prediction, truth, delta: float):
    r = np.abs(np.asarray(prediction, dtype=float) - np.asarray(truth, dtype=float))
    return np.where(r <= delta, 0.5 * r * r, delta * (r - 0.5 * delta))


def cross_entropy_loss(probability, truth):
    p = np.clip(np.asarray(probability, dtype=float), PROB_EPS, 1 - PROB_EPS)
    y = np.asarray(truth, dtype=float)
    return -(y * np.log(p) + (1 - y) * np.log(1 - p))


def hinge_loss(score, truth):
    """truth in {-1, +1}, score is the raw margin."""
    y = np.asarray(truth, dtype=float)
    s = np.asarray(score, dtype=float)
    return np.maximum(0.0, 1.0 - y * s)


def loss(kind: LossKind, prediction, truth):
    """Dispatch on LossKind; returns array or scalar matching the inputs."""
    if kind.name == "squared":
        out = squared_loss(prediction, truth)
    elif kind.name == "absolute":
        out = absolute_loss(prediction, truth)
    elif kind.name == "huber":
        out = huber_loss(prediction, truth, kind.delta)
    elif kind.name == "cross_entropy":
        out = cross_entropy_loss(prediction, truth)
    else:
        out = hinge_loss(prediction, truth)
    return out if out.shape else float(out)


# -- impurity ---------------------------------------------------------------


def gini(class_counts) -> float:
    """1 - sum of squared class shares."""
    counts = np.asarray(class_counts, dtype=float)
    if counts.size == 0 or counts.sum() <= 0:
        raise ValueError("gini needs at least one positive count")
    if (counts < 0).any():
        raise ValueError("class counts must be non-negative")
    p = counts / counts.sum()
    return float(1.0 - (p * p).sum())


def entropy_impurity(class_counts) -> float:
    """Shannon entropy of the class shares in nats, with 0*ln(0) = 0."""
    counts = np.asarray(class_counts, dtype=float)
    if counts.size == 0 or counts.sum() <= 0:
        raise ValueError("entropy needs at least one positive count")
    if (counts < 0).any():
        raise ValueError("class counts must be non-negative")
    p = counts / counts.sum()
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def weighted_impurity(children) -> float:
    """Size-weighted mean impurity over (n_samples, impurity) children."""
    children = list(children)
    total = sum(n for n, _ in children)
    if total <= 0:
        raise ValueError("children must hold samples")
    return float(sum(n * imp for n, imp in children) / total)
