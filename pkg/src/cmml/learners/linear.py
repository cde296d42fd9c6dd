"""Linear and logistic regression trained by full-batch gradient descent.

Both models pack parameters as [bias, w_1 .. w_d] and hand the engine a
value-and-gradient callable; the engine applies the lasso/ridge penalty to
the weight entries only (the bias mask entry is zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gradient_descent import GDConfig, GDResult, gradient_descent


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def linear_value_and_grad(X: np.ndarray, y: np.ndarray):
    """Mean half-squared-error objective over packed [bias, w] parameters."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]

    def fn(theta):
        bias, w = theta[0], theta[1:]
        residual = X @ w + bias - y
        value = 0.5 * float(residual @ residual) / n
        grad = np.concatenate(([residual.sum() / n], X.T @ residual / n))
        return value, grad

    return fn


def logistic_value_and_grad(X: np.ndarray, y: np.ndarray):
    """Mean negative log-likelihood over packed [bias, beta] parameters.

    Uses the log-sum-exp form log(1+e^z) - y*z, stable for large |z|.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]

    def fn(theta):
        bias, beta = theta[0], theta[1:]
        z = X @ beta + bias
        value = float(np.sum(np.logaddexp(0.0, z) - y * z)) / n
        residual = sigmoid(z) - y
        grad = np.concatenate(([residual.sum() / n], X.T @ residual / n))
        return value, grad

    return fn


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    iterations: int = 0

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.bias


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    threshold: float = 0.5
    iterations: int = 0

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(np.asarray(X, dtype=float) @ self.weights + self.bias)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= self.threshold).astype(int)


def fit_linear(X, y, cfg: GDConfig) -> LinearModel:
    """Least squares with optional lasso/ridge penalty, unpenalized bias."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per target value")
    theta0 = np.zeros(X.shape[1] + 1)
    mask = np.ones_like(theta0)
    mask[0] = 0.0
    result = gradient_descent(linear_value_and_grad(X, y), theta0, cfg, penalize_mask=mask)
    return LinearModel(result.weights[1:], float(result.weights[0]), result.iterations)


def fit_logistic(X, y, cfg: GDConfig, threshold: float = 0.5) -> LogisticModel:
    """Binary logistic regression by gradient descent on the mean NLL."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per label")
    labels = set(np.unique(y))
    if not labels <= {0.0, 1.0}:
        raise ValueError(f"labels must be 0/1, got {sorted(labels)}")
    theta0 = np.zeros(X.shape[1] + 1)
    mask = np.ones_like(theta0)
    mask[0] = 0.0
    result = gradient_descent(logistic_value_and_grad(X, y), theta0, cfg, penalize_mask=mask)
    return LogisticModel(result.weights[1:], float(result.weights[0]), threshold, result.iterations)
