"""Empirical sensitivity sampling for black-box target functions.

Each iteration draws ``n + 1`` records, evaluates the target on the first
``n`` and on the neighbour that swaps record ``n`` for record ``n + 1``, and
records the output-norm distance. The sorted measurements give an empirical
CDF whose order statistics are the sensitivity estimates.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import enum
import math
import re
from pathlib import Path
from typing import Callable

import numpy as np

from . import rng as rngmod
from .errors import (
    DomainError,
    NonDeterministicTargetError,
    SensikitError,
    TargetEvaluationError,
)


class Norm(enum.Enum):
    L1 = "L1"
    L2 = "L2"
    LINF = "LINF"
    LATTICE_SUP = "LATTICE_SUP"

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        diff = np.abs(a - b)
        if self is Norm.L1:
            return float(diff.sum())
        if self is Norm.L2:
            return float(np.sqrt(np.dot(diff, diff)))
        # sup over output coordinates; for lattice-valued outputs these are the lattice points
        return float(diff.max()) if diff.size else 0.0


@dataclasses.dataclass(frozen=True)
class TargetFunction:
    """A deterministic map from ``n`` records to a real output vector.

    ``evaluate`` receives an ``(n, width)`` array and must return a 1-D array
    of constant length. ``global_bound`` is an optional analytic sensitivity
    bound, used only for comparisons.
    """

    n: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    norm: Norm = Norm.L1
    label: str = "target"
    global_bound: float | None = None
    verify_determinism: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"target arity must be a positive integer, got {self.n}")

    def __call__(self, records: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.evaluate(records), dtype=np.float64))


@dataclasses.dataclass(frozen=True)
class RecordSampler:
    """Distribution over records.

    ``draw(rng, size)`` returns ``size`` i.i.d. records as a ``(size, width)`` array.
    """

    draw: Callable[[np.random.Generator, int], np.ndarray]
    description: str = "P"

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.asarray(self.draw(rng, size), dtype=np.float64)
        return out.reshape(size, -1)


HEADER_RE = re.compile(
    r"^sensikit-sample v1, n=(\d+), m=(\d+), norm=(\w+), seed=(\d+), target=(.*)$"
)


@dataclasses.dataclass(frozen=True)
class SensitivitySample:
    values: np.ndarray
    n: int
    norm: Norm
    master_seed: int
    target_label: str = "target"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("a sensitivity sample needs at least one value")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DomainError("sensitivities must be finite and non-negative")
        object.__setattr__(self, "values", np.sort(values, kind="stable"))

    @property
    def m(self) -> int:
        return int(self.values.size)

    def header(self) -> str:
        label = self.target_label.replace("\n", " ")
        return (
            f"sensikit-sample v1, n={self.n}, m={self.m}, norm={self.norm.value}, "
            f"seed={self.master_seed}, target={label}"
        )

    def dumps(self) -> str:
        lines = [self.header()]
        lines.extend(repr(float(v)) for v in self.values)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SensitivitySample":
        lines = text.splitlines()
        if not lines:
            raise DomainError("empty sensitivity sample file")
        match = HEADER_RE.match(lines[0])
        if match is None:
            raise DomainError(f"unrecognised sample header: {lines[0]!r}")
        n, m, norm, seed, label = match.groups()
        try:
            norm = Norm(norm)
            values = np.array([float(s) for s in lines[1:] if s.strip()], dtype=np.float64)
        except ValueError as exc:
            raise DomainError(f"malformed sensitivity sample: {exc}") from exc
        if values.size != int(m):
            raise DomainError(f"header declares m={m} but file holds {values.size} values")
        if np.any(np.diff(values) < 0):
            raise DomainError("sample values must be sorted ascending")
        return cls(values, int(n), norm, int(seed), label)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path: str | Path) -> "SensitivitySample":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def measure_pair(target: TargetFunction, records: np.ndarray) -> float:
    """Output distance between the first ``n`` records and its neighbour."""
    n = target.n
    if records.shape[0] != n + 1:
        raise DomainError(f"expected {n + 1} records, got {records.shape[0]}")
    first = target(records[:n])
    neighbour = np.concatenate([records[: n - 1], records[n : n + 1]])
    second = target(neighbour)
    if first.shape != second.shape:
        raise TargetEvaluationError(
            f"target output dimension changed: {first.shape} vs {second.shape}"
        )
    return target.norm.distance(first, second)


def _measure(target, p, seed, index, purpose) -> float:
    records = p(rngmod.substream(seed, index, purpose), target.n + 1)
    try:
        g = measure_pair(target, records)
    except SensikitError as exc:
        if isinstance(exc, TargetEvaluationError) and exc.iteration is None:
            exc.iteration = index
        raise
    except Exception as exc:
        raise TargetEvaluationError(
            f"target evaluation failed at iteration {index}: {exc}", iteration=index
        ) from exc
    if not math.isfinite(g):
        raise TargetEvaluationError(
            f"non-finite sensitivity {g} at iteration {index}", iteration=index
        )
    return g


def _measure_many(target, p, seed, count, purpose, threads) -> np.ndarray:
    if count < 1:
        raise DomainError(f"need at least one iteration, got {count}")
    threads = max(1, int(threads))

    def run(bounds):
        lo, hi = bounds
        return np.array([_measure(target, p, seed, i, purpose) for i in range(lo, hi)])

    if threads == 1:
        return run((0, count))
    n_chunks = min(count, threads * 4)
    edges = np.linspace(0, count, n_chunks + 1).astype(int)
    chunks = list(zip(edges[:-1], edges[1:]))
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run, chunks))
    return np.concatenate(parts)


def check_determinism(target: TargetFunction, p: RecordSampler, master_seed: int) -> None:
    """Evaluate the first sampled database twice and demand identical outputs."""
    records = p(rngmod.substream(master_seed, 0, rngmod.SAMPLING), target.n + 1)
    a = target(records[: target.n])
    b = target(records[: target.n])
    if a.shape != b.shape or not np.array_equal(a, b):
        raise NonDeterministicTargetError(
            f"target {target.label!r} returned different outputs for identical input",
            iteration=0,
        )


def sample_sensitivity(
    target: TargetFunction,
    p: RecordSampler,
    m: int,
    master_seed: int,
    threads: int = 1,
) -> SensitivitySample:
    """Measure ``m`` i.i.d. sensitivities of ``target`` under records from ``p``.

    The result depends only on the arguments, not on ``threads``.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    master_seed = rngmod.check_seed(master_seed)
    if target.verify_determinism:
        check_determinism(target, p, master_seed)
    values = _measure_many(target, p, master_seed, int(m), rngmod.SAMPLING, threads)
    return SensitivitySample(values, target.n, target.norm, master_seed, target.label)


def estimate_delta(sample: SensitivitySample | np.ndarray, k: int) -> float:
    """The ``k``-th smallest measured sensitivity (1-based); ``k = m`` is the maximum."""
    values = sample.values if isinstance(sample, SensitivitySample) else np.sort(sample)
    m = values.size
    if int(k) != k or not 1 <= k <= m:
        raise IndexError(f"order-statistic index k={k} outside [1, {m}]")
    return float(values[int(k) - 1])


def empirical_cdf(sample: SensitivitySample | np.ndarray, g: float) -> float:
    """Fraction of measured sensitivities that are ``<= g``."""
    values = sample.values if isinstance(sample, SensitivitySample) else np.sort(sample)
    return float(np.searchsorted(values, g, side="right")) / values.size


def verify_rdp_coverage(
    target: TargetFunction,
    p: RecordSampler,
    delta_hat: float,
    trials: int,
    seed: int,
    threads: int = 1,
) -> float:
    """Fraction of fresh neighbouring pairs whose sensitivity is within ``delta_hat``.

    Pairs are drawn from a stream disjoint from the one used by
    :func:`sample_sensitivity`, so the same seed can be passed to both.
    """
    if int(trials) != trials or trials < 1:
        raise DomainError(f"trials must be a positive integer, got {trials}")
    values = _measure_many(
        target, p, rngmod.check_seed(seed), int(trials), rngmod.VERIFICATION, threads
    )
    return float(np.count_nonzero(values <= delta_hat)) / values.size
