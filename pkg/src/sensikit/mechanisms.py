"""Sensitivity-parameterised privacy mechanisms and Sample-Then-Respond.

Every mechanism here is private on any pair of databases whose output
distance is at most the ``delta`` it is run with. Plugging in a sampled
sensitivity therefore yields random differential privacy.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Sequence

import numpy as np

from .errors import DegenerateSensitivityError, DomainError, NumericalFailure
from .planner import SamplingPlan, validate_plan
from .sampler import RecordSampler, TargetFunction, estimate_delta, sample_sensitivity

GAUSSIAN_SAFETY = 1.0 + 1e-6

VARIANTS = ("vector", "choice", "bernstein")


@dataclasses.dataclass(frozen=True)
class Release:
    """Output of a mechanism together with the parameters it was produced under.

    ``payload`` is the noisy vector, a one-element array holding the chosen
    index, or the noisy lattice (row-major over ``dims`` axes of length
    ``lattice_size + 1``).
    """

    variant: str
    payload: np.ndarray
    epsilon: float
    delta_hat: float
    dp_delta: float = 0.0
    gamma: float | None = None
    lattice_size: int | None = None
    dims: int | None = None
    order: int | None = None
    degenerate: bool = False

    @property
    def index(self) -> int:
        if self.variant != "choice":
            raise AttributeError("only choice releases carry an index")
        return int(self.payload[0])

    def to_dict(self) -> dict:
        out = {
            "variant": self.variant,
            "epsilon": self.epsilon,
            "dp_delta": self.dp_delta,
            "gamma": self.gamma,
            "delta_hat": self.delta_hat,
            "degenerate": self.degenerate,
        }
        if self.variant == "choice":
            out["index"] = self.index
        else:
            out["payload"] = [float(v) for v in self.payload]
        if self.variant == "bernstein":
            out.update(lattice_size=self.lattice_size, dims=self.dims, order=self.order)
        return out

    def dumps(self) -> str:
        # json emits floats in shortest round-trip form; infinite epsilon becomes Infinity.
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Release":
        data = json.loads(text)
        variant = data["variant"]
        if variant not in VARIANTS:
            raise DomainError(f"unknown release variant {variant!r}")
        if variant == "choice":
            payload = np.array([data["index"]], dtype=np.float64)
        else:
            payload = np.array(data["payload"], dtype=np.float64)
        return cls(
            variant=variant,
            payload=payload,
            epsilon=float(data["epsilon"]),
            delta_hat=float(data["delta_hat"]),
            dp_delta=float(data.get("dp_delta", 0.0)),
            gamma=data.get("gamma"),
            lattice_size=data.get("lattice_size"),
            dims=data.get("dims"),
            order=data.get("order"),
            degenerate=bool(data.get("degenerate", False)),
        )


def check_sensitivity(delta: float, allow_degenerate: bool) -> bool:
    """Return True when the release must be degenerate (unnoised)."""
    if not math.isfinite(delta) or delta < 0:
        raise DomainError(f"sensitivity must be finite and >= 0, got {delta}")
    if delta == 0.0:
        if not allow_degenerate:
            raise DegenerateSensitivityError(
                "estimated sensitivity is 0, which would release the value without "
                "noise; increase k or m, use the maximum statistic, or pass "
                "allow_degenerate to release non-privately"
            )
        return True
    return False


def _check_epsilon(epsilon: float) -> None:
    if not epsilon > 0:
        raise DomainError(f"epsilon must be > 0, got {epsilon}")


def laplace_noise(rng: np.random.Generator, scale: float, size: int | tuple) -> np.ndarray:
    """Laplace(0, scale) draws by inverting the CDF of uniform draws.

    ``u`` is uniform on [-1/2, 1/2) and the draw is
    ``-scale * sign(u) * log(1 - 2|u|)``; the measure-zero endpoint is nudged
    inside the support.
    """
    u = rng.random(size) - 0.5
    tail = 1.0 - 2.0 * np.abs(u)
    tail = np.where(tail > 0.0, tail, np.finfo(np.float64).tiny)
    return -scale * np.sign(u) * np.log(tail)


def laplace_release(
    value,
    delta: float,
    epsilon: float,
    rng: np.random.Generator,
    allow_degenerate: bool = False,
) -> Release:
    """Add i.i.d. Laplace noise of scale ``delta / epsilon`` to each coordinate."""
    _check_epsilon(epsilon)
    value = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if check_sensitivity(delta, allow_degenerate):
        return Release("vector", value.copy(), epsilon, delta, degenerate=True)
    scale = delta / epsilon
    noisy = value + laplace_noise(rng, scale, value.shape) if scale > 0 else value.copy()
    return Release("vector", noisy, epsilon, delta)


def gaussian_sigma(delta: float, epsilon: float, dp_delta: float) -> float:
    """Noise standard deviation for (epsilon, dp_delta)-DP at L2 sensitivity ``delta``."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"Gaussian calibration needs epsilon in (0, 1), got {epsilon}")
    if not 0.0 < dp_delta < 1.0:
        raise DomainError(f"dp_delta must lie in (0, 1), got {dp_delta}")
    return GAUSSIAN_SAFETY * delta * math.sqrt(2.0 * math.log(1.25 / dp_delta)) / epsilon


def gaussian_release(
    value,
    delta: float,
    epsilon: float,
    dp_delta: float,
    rng: np.random.Generator,
    allow_degenerate: bool = False,
) -> Release:
    sigma = gaussian_sigma(1.0, epsilon, dp_delta)
    value = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if check_sensitivity(delta, allow_degenerate):
        return Release("vector", value.copy(), epsilon, delta, dp_delta, degenerate=True)
    noisy = value + delta * sigma * rng.standard_normal(value.shape)
    return Release("vector", noisy, epsilon, delta, dp_delta)


def exponential_probabilities(scores, delta: float, epsilon: float) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise DomainError("the exponential mechanism needs a non-empty score vector")
    if not np.all(np.isfinite(scores)):
        raise DomainError("scores must be finite")
    logits = epsilon * (scores - scores.max()) / (2.0 * delta)
    weights = np.exp(logits)
    total = weights.sum()
    # The maximal score always has weight exactly 1.
    if not total >= 1.0:
        raise NumericalFailure("exponential mechanism weights underflowed")
    return weights / total


def exponential_release(
    scores,
    delta: float,
    epsilon: float,
    rng: np.random.Generator,
    allow_degenerate: bool = False,
) -> Release:
    """Choose a response index with probability proportional to exp(eps * score / (2 delta))."""
    _check_epsilon(epsilon)
    if check_sensitivity(delta, allow_degenerate):
        best = int(np.argmax(np.asarray(scores, dtype=np.float64)))
        return Release("choice", np.array([best], dtype=np.float64), epsilon, delta, degenerate=True)
    probs = exponential_probabilities(scores, delta, epsilon)
    cdf = np.cumsum(probs)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    index = min(index, probs.size - 1)
    return Release("choice", np.array([index], dtype=np.float64), epsilon, delta)


def bernstein_noise_scale(delta: float, epsilon: float, lattice_size: int, dims: int) -> float:
    return delta * (lattice_size + 1) ** dims / epsilon


def bernstein_release(
    lattice_values,
    lattice_size: int,
    dims: int,
    order: int,
    delta: float,
    epsilon: float,
    rng: np.random.Generator,
    allow_degenerate: bool = False,
) -> Release:
    """Perturb target values on the lattice {0, 1/k, ..., 1}^dims.

    Each lattice value receives Laplace noise of scale
    ``delta * (k + 1)^dims / epsilon``. ``epsilon=inf`` gives a noiseless
    release for testing.
    """
    _check_epsilon(epsilon)
    if lattice_size < 1 or dims < 1 or order < 1:
        raise DomainError("lattice size, dims and order must be positive")
    values = np.asarray(lattice_values, dtype=np.float64).reshape(-1)
    if values.size != (lattice_size + 1) ** dims:
        raise DomainError(
            f"expected {(lattice_size + 1) ** dims} lattice values, got {values.size}"
        )
    meta = dict(lattice_size=lattice_size, dims=dims, order=order)
    if check_sensitivity(delta, allow_degenerate):
        return Release("bernstein", values.copy(), epsilon, delta, degenerate=True, **meta)
    scale = bernstein_noise_scale(delta, epsilon, lattice_size, dims)
    noisy = values + laplace_noise(rng, scale, values.shape) if scale > 0 else values.copy()
    return Release("bernstein", noisy, epsilon, delta, **meta)


def bernstein_basis(k: int, y) -> np.ndarray:
    """Degree-``k`` Bernstein basis values, shape ``(len(y), k + 1)``."""
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    nu = np.arange(k + 1)
    binom = np.array([math.comb(k, v) for v in nu], dtype=np.float64)
    # 0 ** 0 == 1 in numpy, which is the right convention at the endpoints.
    return binom * y[:, None] ** nu * (1.0 - y[:, None]) ** (k - nu)


def iterated_coefficients(k: int, order: int) -> np.ndarray:
    """Matrix mapping lattice values to the coefficients of the order-``order`` operator.

    With ``M`` the lattice-to-lattice Bernstein map, the iterated operator
    ``sum_i C(h, i) (-1)^(i-1) B^i`` evaluated at ``y`` equals
    ``basis(y) @ sum_i C(h, i) (-1)^(i-1) M^(i-1) @ g``.
    """
    lattice = np.arange(k + 1) / k
    M = bernstein_basis(k, lattice)
    out = np.zeros((k + 1, k + 1))
    power = np.eye(k + 1)
    for i in range(1, order + 1):
        out += math.comb(order, i) * (-1) ** (i - 1) * power
        power = M @ power
    return out


def bernstein_evaluate(release: Release, y) -> float | np.ndarray:
    """Evaluate a Bernstein release at points of [0,1]^dims.

    ``y`` is one point (length ``dims``) or an array of shape ``(p, dims)``;
    for ``dims == 1`` a flat array of scalars is accepted too.
    """
    if release.variant != "bernstein":
        raise DomainError("bernstein_evaluate needs a bernstein release")
    k, dims, order = release.lattice_size, release.dims, release.order
    pts = np.asarray(y, dtype=np.float64)
    single = pts.ndim == 0 or (pts.ndim == 1 and pts.size == dims and dims > 1)
    pts = pts.reshape(-1, dims)
    if np.any((pts < 0.0) | (pts > 1.0)) or not np.all(np.isfinite(pts)):
        raise DomainError("query points must lie in the unit cube")
    coeffs = release.payload.reshape((k + 1,) * dims)
    A = iterated_coefficients(k, order)
    for axis in range(dims):
        coeffs = np.moveaxis(np.tensordot(A, coeffs, axes=([1], [axis])), 0, axis)
    out = np.empty(pts.shape[0])
    for idx, point in enumerate(pts):
        c = coeffs
        for axis in range(dims):
            c = bernstein_basis(k, point[axis])[0] @ c
        out[idx] = float(c)
    if single:
        return float(out[0])
    return out


@dataclasses.dataclass(frozen=True)
class Mechanism:
    """Mechanism selector with its privacy budget.

    ``kind`` is one of laplace, gaussian, exponential or bernstein. The
    bernstein fields are only read for that kind.
    """

    kind: str
    epsilon: float
    dp_delta: float = 0.0
    lattice_size: int = 10
    dims: int = 1
    order: int = 1
    allow_degenerate: bool = False

    def respond(self, value, delta: float, rng: np.random.Generator) -> Release:
        if self.kind == "laplace":
            return laplace_release(value, delta, self.epsilon, rng, self.allow_degenerate)
        if self.kind == "gaussian":
            return gaussian_release(
                value, delta, self.epsilon, self.dp_delta, rng, self.allow_degenerate
            )
        if self.kind == "exponential":
            return exponential_release(value, delta, self.epsilon, rng, self.allow_degenerate)
        if self.kind == "bernstein":
            return bernstein_release(
                value, self.lattice_size, self.dims, self.order, delta,
                self.epsilon, rng, self.allow_degenerate,
            )
        raise DomainError(f"unknown mechanism {self.kind!r}")


def respond_with_sample(database, target, mechanism, delta_hat, rng, gamma=None) -> Release:
    records = np.asarray(database, dtype=np.float64)
    records = records.reshape(len(records), -1)
    if records.shape[0] != target.n:
        raise DomainError(f"database has {records.shape[0]} records, target expects {target.n}")
    release = mechanism.respond(target(records), delta_hat, rng)
    return dataclasses.replace(release, gamma=gamma)


def sample_then_respond(
    database: Sequence | np.ndarray,
    target: TargetFunction,
    mechanism: Mechanism,
    plan: SamplingPlan,
    p: RecordSampler,
    seed: int,
    rng: np.random.Generator | None = None,
    threads: int = 1,
) -> Release:
    """Estimate sensitivity from ``p`` alone, then respond on ``database``.

    The sampler never sees ``database``. Noise comes from ``rng`` (fresh OS
    entropy when omitted); ``seed`` only drives the sampler.
    """
    verdict = validate_plan(plan)
    if not verdict:
        raise DomainError(f"invalid sampling plan: {verdict.reason}")
    sample = sample_sensitivity(target, p, plan.m, seed, threads=threads)
    delta_hat = estimate_delta(sample, plan.k)
    if rng is None:
        rng = np.random.default_rng()
    return respond_with_sample(database, target, mechanism, delta_hat, rng, gamma=plan.gamma)
