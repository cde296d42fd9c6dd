"""Full-batch gradient descent with the regularized-risk penalty built in.

The engine receives the base objective (value and gradient as a function of
the packed weight vector) and adds the penalty terms itself: an L1 term via
the sign subgradient (sign(0) = 0) and an L2 term, both restricted to the
entries selected by ``penalize_mask`` so callers can leave a bias unpenalized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

_DIVERGENCE_PATIENCE = 10


class DivergenceError(RuntimeError):
    """The objective rose for too many consecutive iterations."""


@dataclass(frozen=True)
class GDConfig:
    step_size: float
    max_iters: int = 1000
    tolerance: float = 1e-8
    l1_penalty: float = 0.0
    l2_penalty: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tolerance < 0 or self.l1_penalty < 0 or self.l2_penalty < 0:
            raise ValueError("tolerance and penalties must be non-negative")


@dataclass(frozen=True)
class GDResult:
    weights: np.ndarray
    iterations: int
    converged: bool  # gradient norm fell under tolerance


def gradient_descent(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    init: np.ndarray,
    cfg: GDConfig,
    penalize_mask: Optional[np.ndarray] = None,
) -> GDResult:
    """Minimize base objective + l1*sum|w| + l2*sum(w^2) over masked entries.

    Stops when the full (penalized) gradient norm drops below the tolerance
    or after max_iters updates. Raises DivergenceError after ten consecutive
    objective increases, the signature of a destabilizing step size.
    """
    w = np.array(init, dtype=float)
    mask = np.ones_like(w) if penalize_mask is None else np.asarray(penalize_mask, dtype=float)

    def penalized(wvec):
        value, grad = value_and_grad(wvec)
        masked = wvec * mask
        if cfg.l1_penalty:
            value = value + cfg.l1_penalty * np.abs(masked).sum()
            grad = grad + cfg.l1_penalty * np.sign(masked)
        if cfg.l2_penalty:
            value = value + cfg.l2_penalty * (masked * masked).sum()
            grad = grad + 2.0 * cfg.l2_penalty * masked
        return value, grad

    previous = None
    rising = 0
    for iteration in range(cfg.max_iters):
        value, grad = penalized(w)
        if np.linalg.norm(grad) < cfg.tolerance:
            return GDResult(w, iteration, True)
        if previous is not None and value > previous:
            rising += 1
            if rising >= _DIVERGENCE_PATIENCE:
                raise DivergenceError(
                    f"objective rose for {rising} consecutive iterations "
                    f"(step_size={cfg.step_size}); use a smaller step size"
                )
        else:
            rising = 0
        previous = value
        w = w - cfg.step_size * grad
    value, grad = penalized(w)
    return GDResult(w, cfg.max_iters, bool(np.linalg.norm(grad) < cfg.tolerance))
