"""Sampling plans (rho, m, k, gamma) that guarantee random differential privacy.

A plan is valid when ``0 < rho < min(gamma, 1/2)``,
``m >= log(1/rho) / (2 (gamma - rho)^2)`` and
``m >= k >= m (1 - gamma + rho + sqrt(log(1/rho) / (2m)))``. The three
``plan_min_*`` constructors pick ``rho`` at the closed-form optimum for one
resource given a budget on another.
"""

from __future__ import annotations

import dataclasses
import decimal
import enum
import json
import logging
import math

from .errors import DomainError, InfeasiblePlanError
from .numerics import Branch, dkw_deviation, lambert_w

logger = logging.getLogger(__name__)

# Relative slack when re-checking inequalities that hold with equality by construction.
_VALIDATE_RTOL = 1e-9


class Objective(enum.Enum):
    MIN_M = "min_m"
    MIN_K = "min_k"
    MIN_GAMMA = "min_gamma"
    MANUAL = "manual"


@dataclasses.dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float = 0.0
    gamma: float = 0.05

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError(f"delta must lie in [0, 1], got {self.delta}")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")


@dataclasses.dataclass(frozen=True)
class SamplingPlan:
    rho: float
    m: int
    k: int
    gamma: float
    objective: Objective = Objective.MANUAL

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "m": self.m,
            "k": self.k,
            "gamma": self.gamma,
            "objective": self.objective.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SamplingPlan":
        return cls(
            rho=float(data["rho"]),
            m=int(data["m"]),
            k=int(data["k"]),
            gamma=float(data["gamma"]),
            objective=Objective(data.get("objective", "manual")),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "SamplingPlan":
        return cls.from_dict(json.loads(text))


@dataclasses.dataclass(frozen=True)
class PlanVerdict:
    valid: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.valid


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")


def _check_m(m: int) -> None:
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")


def min_m_real(rho: float, gamma: float) -> float:
    """Real-valued sample size bound log(1/rho) / (2 (gamma - rho)^2)."""
    return -math.log(rho) / (2.0 * (gamma - rho) ** 2)


def order_index(m: int, gamma: float, rho: float) -> int:
    """Smallest admissible order-statistic index, clamped to [1, m]."""
    level = 1.0 - gamma + rho + dkw_deviation(m, rho)
    return min(max(math.ceil(m * level), 1), m)


def confidence_floor(m: int, rho: float) -> float:
    """Smallest gamma reachable with sample size ``m`` at a given ``rho``."""
    return rho + dkw_deviation(m, rho)


def _rho_for_fixed_m(m: int) -> float:
    return math.exp(0.5 * lambert_w(Branch.SECONDARY, -1.0 / (4.0 * m)))


def plan_min_m(gamma: float) -> SamplingPlan:
    """Plan with the least sampling effort ``m`` for confidence ``gamma``."""
    _check_gamma(gamma)
    rho = math.exp(lambert_w(Branch.SECONDARY, -gamma / (2.0 * math.sqrt(math.e))) + 0.5)
    m = math.ceil(min_m_real(rho, gamma))
    plan = SamplingPlan(rho, m, order_index(m, gamma, rho), gamma, Objective.MIN_M)
    _assert_valid(plan)
    return plan


def plan_min_k(m: int, gamma: float) -> SamplingPlan:
    """Plan with the smallest order-statistic index for budgets ``m`` and ``gamma``.

    Raises:
        InfeasiblePlanError: when ``gamma`` is below the floor reachable
            with ``m`` samples; the floor is attached as ``min_gamma``.
    """
    _check_m(m)
    _check_gamma(gamma)
    rho = _rho_for_fixed_m(m)
    floor = confidence_floor(m, rho)
    if gamma < floor:
        raise InfeasiblePlanError(
            f"gamma={gamma} is infeasible with m={m}; the smallest feasible gamma "
            f"is {floor:.6g} (increase m or gamma)",
            min_gamma=floor,
        )
    plan = SamplingPlan(rho, int(m), order_index(m, gamma, rho), gamma, Objective.MIN_K)
    _assert_valid(plan)
    return plan


def plan_min_gamma(m: int) -> SamplingPlan:
    """Plan with the strongest confidence (smallest gamma) reachable with ``m`` samples.

    The resulting order statistic is the sample maximum.
    """
    _check_m(m)
    rho = _rho_for_fixed_m(m)
    gamma = confidence_floor(m, rho)
    if gamma >= 1.0:
        raise InfeasiblePlanError(
            f"m={m} cannot reach any confidence below 1 (floor {gamma:.6g}); use m >= 2",
            min_gamma=gamma,
        )
    plan = SamplingPlan(rho, int(m), int(m), gamma, Objective.MIN_GAMMA)
    _assert_valid(plan)
    return plan


def validate_plan(plan: SamplingPlan) -> PlanVerdict:
    """Check a plan against the sufficient conditions for RDP.

    Returns a verdict naming the first violated condition, if any.
    """
    rho, m, k, gamma = plan.rho, plan.m, plan.k, plan.gamma
    if not 0.0 < gamma < 1.0:
        return PlanVerdict(False, f"gamma={gamma} outside (0, 1)")
    if int(m) != m or m < 1:
        return PlanVerdict(False, f"m={m} is not a positive integer")
    if int(k) != k or k < 1:
        return PlanVerdict(False, f"k={k} is not a positive integer")
    if not 0.0 < rho:
        return PlanVerdict(False, f"rho={rho} must be positive")
    if rho >= 0.5:
        return PlanVerdict(False, f"rho={rho} must be < 1/2")
    if rho >= gamma:
        return PlanVerdict(False, f"rho={rho} must be < gamma={gamma}")
    needed_m = min_m_real(rho, gamma)
    if m < needed_m * (1.0 - _VALIDATE_RTOL):
        return PlanVerdict(False, f"m={m} below sample-size bound {math.ceil(needed_m)}")
    if k > m:
        return PlanVerdict(False, f"k={k} exceeds m={m}")
    needed_k = m * (1.0 - gamma + rho + dkw_deviation(m, rho))
    if k < needed_k * (1.0 - _VALIDATE_RTOL):
        return PlanVerdict(False, f"k={k} below order-statistic bound {math.ceil(needed_k)}")
    return PlanVerdict(True)


def _assert_valid(plan: SamplingPlan) -> None:
    verdict = validate_plan(plan)
    if not verdict:
        raise AssertionError(f"constructed plan {plan} is invalid: {verdict.reason}")


def transfer_confidence(gamma: float, tau: float, n: int) -> float:
    """Confidence level that carries over to a distribution within KL ``tau``.

    A mechanism that is RDP with confidence ``gamma`` with respect to P is RDP
    with confidence ``gamma + sqrt((n + 1) tau / 2)`` with respect to any Q
    with KL(P || Q) <= tau. Values past 1 are capped and logged as vacuous.
    """
    _check_gamma(gamma)
    if not tau >= 0:
        raise DomainError(f"tau must be >= 0, got {tau}")
    _check_m(n)
    # Evaluate at 50 digits and round once, so the result is correctly rounded.
    with decimal.localcontext() as ctx:
        ctx.prec = 50
        exact = decimal.Decimal(gamma) + (decimal.Decimal(n + 1) * decimal.Decimal(tau) / 2).sqrt()
    value = float(exact)
    if value >= 1.0:
        logger.warning("transferred confidence %.6g is vacuous; capped at 1", value)
        return 1.0
    return value
