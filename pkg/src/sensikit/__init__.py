"""Sensitivity sampling for random differential privacy.

Estimate the sensitivity of a black-box target from samples of a record
distribution, then release the target's output through a mechanism
calibrated to that estimate.
"""

from .errors import (
    DegenerateSensitivityError,
    DomainError,
    InfeasiblePlanError,
    InputOutputError,
    NonDeterministicTargetError,
    NumericalFailure,
    SensikitError,
    TargetEvaluationError,
)
from .mechanisms import (
    Mechanism,
    Release,
    bernstein_evaluate,
    bernstein_release,
    exponential_release,
    gaussian_release,
    laplace_release,
    respond_with_sample,
    sample_then_respond,
)
from .numerics import Branch, dkw_deviation, lambert_w
from .planner import (
    Objective,
    PrivacyBudget,
    SamplingPlan,
    plan_min_gamma,
    plan_min_k,
    plan_min_m,
    transfer_confidence,
    validate_plan,
)
from .sampler import (
    Norm,
    RecordSampler,
    SensitivitySample,
    TargetFunction,
    empirical_cdf,
    estimate_delta,
    sample_sensitivity,
    verify_rdp_coverage,
)

__version__ = "0.1.0"

__all__ = [
    "Branch", "DegenerateSensitivityError", "DomainError", "InfeasiblePlanError",
    "InputOutputError", "Mechanism", "NonDeterministicTargetError", "Norm",
    "NumericalFailure", "Objective", "PrivacyBudget", "RecordSampler", "Release",
    "SamplingPlan", "SensikitError", "SensitivitySample", "TargetEvaluationError",
    "TargetFunction", "bernstein_evaluate", "bernstein_release", "dkw_deviation",
    "empirical_cdf", "estimate_delta", "exponential_release", "gaussian_release",
    "lambert_w", "laplace_release", "plan_min_gamma", "plan_min_k", "plan_min_m",
    "respond_with_sample", "sample_sensitivity", "sample_then_respond",
    "transfer_confidence", "validate_plan", "verify_rdp_coverage",
]
