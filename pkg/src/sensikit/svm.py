"""Deterministic linear soft-margin SVM with an unregularised bias.

Minimises ``0.5 * ||w||^2 + (C / n) * sum(hinge(y_i (w . x_i + b)))`` through
its dual, where ``0 <= alpha_i <= C / n`` and ``sum(alpha_i y_i) = 0``. The
equality constraint means single coordinates cannot move, so each step
updates the maximal KKT-violating pair. Selection ties break on the lowest
index, which makes the solver a pure function of the input (row order
included).
"""

from __future__ import annotations

import dataclasses
import math

import numba
import numpy as np

from .errors import DomainError
from .sampler import Norm, TargetFunction


@dataclasses.dataclass(frozen=True)
class SvmConfig:
    C: float = 3.0
    d: int = 2
    tolerance: float = 1e-8
    max_passes: int = 10_000

    def __post_init__(self):
        if not self.C > 0:
            raise DomainError(f"C must be > 0, got {self.C}")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d}")
        if not self.tolerance > 0 or self.max_passes < 1:
            raise DomainError("tolerance and max_passes must be positive")


@dataclasses.dataclass(frozen=True)
class SvmModel:
    w: np.ndarray
    b: float
    alpha: np.ndarray
    converged: bool
    iterations: int

    def decision(self, X: np.ndarray) -> np.ndarray:
        return X @ self.w + self.b

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.decision(X) >= 0.0, 1.0, -1.0)

    def as_vector(self) -> np.ndarray:
        return np.append(self.w, self.b)


@numba.njit(cache=True, nogil=True)
def _smo(X, y, upper, tol, max_iter):
    n, d = X.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    grad = -np.ones(n)  # y_t * (w . x_t) - 1
    it = 0
    converged = False
    while it < max_iter:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for t in range(n):
            v = -y[t] * grad[t]
            if y[t] > 0:
                up = alpha[t] < upper
                low = alpha[t] > 0.0
            else:
                up = alpha[t] > 0.0
                low = alpha[t] < upper
            if up and v > gmax:
                gmax = v
                i = t
            if low and v < gmin:
                gmin = v
                j = t
        if i < 0 or j < 0 or gmax - gmin <= tol:
            converged = True
            break
        eta = 0.0
        for c in range(d):
            diff = X[i, c] - X[j, c]
            eta += diff * diff
        if eta <= 1e-12:
            eta = 1e-12
        step = (gmax - gmin) / eta
        room_i = upper - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else upper - alpha[j]
        step = min(step, room_i, room_j)
        clip_i = step == room_i
        clip_j = step == room_j
        ai = alpha[i] + y[i] * step
        aj = alpha[j] - y[j] * step
        if clip_i:
            ai = upper if y[i] > 0 else 0.0
        if clip_j:
            aj = 0.0 if y[j] > 0 else upper
        alpha[i] = min(max(ai, 0.0), upper)
        alpha[j] = min(max(aj, 0.0), upper)
        for c in range(d):
            dw = step * (X[i, c] - X[j, c])
            w[c] += dw
        for t in range(n):
            s = 0.0
            for c in range(d):
                s += X[t, c] * step * (X[i, c] - X[j, c])
            grad[t] += y[t] * s
        it += 1
    return alpha, w, grad, converged, it


def _bias(alpha: np.ndarray, y: np.ndarray, grad: np.ndarray, upper: float) -> float:
    # For every record y_t - w . x_t == -y_t * grad_t.
    target = -y * grad
    free = (alpha > 0.0) & (alpha < upper)
    if np.any(free):
        return float(target[free].mean())
    # Without free vectors the optimal b is any point of the KKT interval.
    at_zero, at_upper = alpha <= 0.0, alpha >= upper
    lower_set = ((y > 0) & at_zero) | ((y < 0) & at_upper)
    upper_set = ((y > 0) & at_upper) | ((y < 0) & at_zero)
    lo = target[lower_set].max() if np.any(lower_set) else -math.inf
    hi = target[upper_set].min() if np.any(upper_set) else math.inf
    if lo > hi:
        # Only possible within the solver tolerance.
        return float(0.5 * (lo + hi))
    support = alpha > 0.0
    # Average the per-vector margin solutions, else take the smallest |b|.
    guess = float(target[support].mean()) if np.any(support) else 0.0
    return float(min(max(guess, lo), hi))


def split_records(records: np.ndarray, d: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Split ``(n, d + 1)`` rows of features-then-label into ``X`` and ``y``."""
    records = np.asarray(records, dtype=np.float64)
    if records.ndim != 2 or records.shape[1] < 2:
        raise DomainError("SVM records must be rows of features followed by a label")
    if d is not None and records.shape[1] != d + 1:
        raise DomainError(f"expected {d} features per record, got {records.shape[1] - 1}")
    X = np.ascontiguousarray(records[:, :-1])
    y = np.ascontiguousarray(records[:, -1])
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DomainError("SVM labels must be -1 or +1")
    return X, y


def svm_train(records: np.ndarray, config: SvmConfig) -> SvmModel:
    X, y = split_records(records, config.d)
    if not np.all(np.isfinite(X)):
        raise DomainError("SVM features must be finite")
    n = X.shape[0]
    upper = config.C / n
    alpha, w, grad, converged, it = _smo(
        X, y, upper, config.tolerance, config.max_passes * n
    )
    return SvmModel(w, _bias(alpha, y, grad, upper), alpha, bool(converged), int(it))


def svm_objective(records: np.ndarray, w: np.ndarray, b: float, C: float) -> float:
    X, y = split_records(records)
    hinge = np.maximum(0.0, 1.0 - y * (X @ w + b))
    return float(0.5 * np.dot(w, w) + C / X.shape[0] * hinge.sum())


def svm_global_sensitivity(C: float, d: int, n: int) -> float:
    """Analytic L1 bound on the change of ``(w, b)`` between neighbouring datasets in [0,1]^d."""
    if C < 0 or d < 1 or n < 1:
        raise DomainError("need C >= 0, d >= 1, n >= 1")
    return 2.0 + 2.0 * C * math.sqrt(d) + 4.0 * C * d / n


def svm_target(config: SvmConfig, n: int) -> TargetFunction:
    """Target releasing the concatenated ``(w, b)`` vector, compared in L1."""

    def evaluate(records):
        return svm_train(records, config).as_vector()

    return TargetFunction(
        n=n,
        evaluate=evaluate,
        norm=Norm.L1,
        label=f"svm(C={config.C:g},d={config.d})",
        global_bound=svm_global_sensitivity(config.C, config.d, n),
    )


def misclassification(w: np.ndarray, b: float, records: np.ndarray) -> float:
    X, y = split_records(records)
    pred = np.where(X @ w + b >= 0.0, 1.0, -1.0)
    return float(np.mean(pred != y))
