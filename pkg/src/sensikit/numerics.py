"""Real branches of the Lambert-W function and the DKW deviation term."""

from __future__ import annotations

import enum
import math

from .errors import DomainError, NumericalFailure

BRANCH_POINT = -math.exp(-1.0)
_RESIDUAL_RTOL = 1e-12
# Iteration target; the looser _RESIDUAL_RTOL is the acceptance bound.
_POLISH_RTOL = 4e-16
_MAX_ITER = 100
# Inputs this close below the float -1/e are treated as the branch point.
_BRANCH_SLACK = 4 * math.ulp(-BRANCH_POINT)


class Branch(enum.Enum):
    PRINCIPAL = "principal"
    SECONDARY = "secondary"

    @classmethod
    def parse(cls, value: "Branch | str | int") -> "Branch":
        if isinstance(value, Branch):
            return value
        if value in (0, "0", "principal"):
            return cls.PRINCIPAL
        if value in (-1, "-1", "secondary"):
            return cls.SECONDARY
        raise DomainError(f"unknown Lambert-W branch {value!r}")


def _residual_ok(w: float, x: float) -> bool:
    return abs(w * math.exp(w) - x) <= _RESIDUAL_RTOL * max(abs(x), 1e-300)


def _initial_guess(branch: Branch, x: float) -> float:
    if x < -0.25:
        # Puiseux expansion about the branch point.
        p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        if branch is Branch.SECONDARY:
            p = -p
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    if branch is Branch.SECONDARY:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        return l1 - l2 + l2 / l1
    if x < 3.0:
        return math.log1p(x) if x > 0 else x
    l1 = math.log(x)
    l2 = math.log(l1)
    return l1 - l2 + l2 / l1


def _bracket(branch: Branch, x: float) -> tuple[float, float]:
    if branch is Branch.SECONDARY:
        u = -math.log(-x) - 1.0
        return -2.0 - math.sqrt(2.0 * u) - u, -1.0
    if x < 0:
        return -1.0, 0.0
    # For x >= e, w >= 1 so e^w <= x.
    return 0.0, max(math.log(x), 1.0)


def lambert_w(branch: Branch | str | int, x: float) -> float:
    """Evaluate a real branch of Lambert-W at ``x``.

    The principal branch is defined on ``[-1/e, inf)`` with values ``>= -1``;
    the secondary branch on ``[-1/e, 0)`` with values ``<= -1``. Halley
    iteration runs inside an analytic bracket and falls back to bisection
    whenever a step would leave it.

    Raises:
        DomainError: if ``x`` is outside the branch domain.
        NumericalFailure: if the residual test is not met within 100 steps.
    """
    branch = Branch.parse(branch)
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"Lambert-W argument must be finite, got {x}")
    if x < BRANCH_POINT - _BRANCH_SLACK:
        raise DomainError(f"Lambert-W undefined below -1/e, got {x}")
    if branch is Branch.SECONDARY and x >= 0:
        raise DomainError(f"secondary Lambert-W branch requires x < 0, got {x}")
    if x <= BRANCH_POINT:
        return -1.0
    if x == 0.0:
        return 0.0

    lo, hi = _bracket(branch, x)
    w = min(max(_initial_guess(branch, x), lo), hi)
    # w*exp(w) - x is increasing on the principal range, decreasing on the secondary.
    sign = 1.0 if branch is Branch.PRINCIPAL else -1.0
    scale = max(abs(x), 1e-300)
    best, best_res = w, math.inf
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) < best_res:
            best, best_res = w, abs(f)
        if abs(f) <= _POLISH_RTOL * scale:
            return w
        if sign * f > 0:
            hi = min(hi, w)
        else:
            lo = max(lo, w)
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1) if wp1 != 0.0 else 0.0
        step_ok = denom != 0.0 and math.isfinite(denom)
        w_next = w - f / denom if step_ok else 0.5 * (lo + hi)
        if not (lo < w_next < hi):
            w_next = 0.5 * (lo + hi)
        if w_next == w or lo >= hi:
            break
        w = w_next
    if _residual_ok(best, x):
        return best
    raise NumericalFailure(f"Lambert-W ({branch.value}) did not converge at x={x}")


def dkw_deviation(m: int, rho: float) -> float:
    """One-sided empirical CDF deviation sqrt(log(1/rho) / (2m)).

    With probability at least ``1 - rho`` the empirical CDF of ``m`` i.i.d.
    draws exceeds the true CDF by no more than this amount, uniformly.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    return math.sqrt(-math.log(rho) / (2.0 * m))
