"""Example targets and record distributions.

Records are rows of a 2-D array. Scalar distributions produce one column;
the two-class generator emits features followed by a +/-1 label.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import DomainError
from .sampler import Norm, RecordSampler, TargetFunction
from .svm import SvmConfig, svm_global_sensitivity, svm_target, svm_train  # noqa: F401

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def mean_target(d: int, n: int, unit_cube: bool = False) -> TargetFunction:
    """Coordinatewise sample mean of ``n`` records in R^d, compared in L1.

    With ``unit_cube`` the records are taken to live in [0,1]^d and the sharp
    global bound ``d / n`` is attached.
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")

    def evaluate(records):
        if records.shape[1] != d:
            raise DomainError(f"expected {d}-dimensional records, got {records.shape[1]}")
        return records.mean(axis=0)

    return TargetFunction(
        n=n,
        evaluate=evaluate,
        norm=Norm.L1,
        label=f"mean(d={d})",
        global_bound=d / n if unit_cube else None,
    )


def constant_target(n: int, value: float = 1.0, width: int = 1) -> TargetFunction:
    out = np.full(width, float(value))
    return TargetFunction(n=n, evaluate=lambda records: out.copy(), label="constant")


@dataclasses.dataclass(frozen=True)
class KdeConfig:
    bandwidth: float = 0.05
    lattice_size: int = 10
    dims: int = 1

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise DomainError(f"bandwidth must be > 0, got {self.bandwidth}")
        if int(self.lattice_size) != self.lattice_size or self.lattice_size < 1:
            raise DomainError(f"lattice size must be a positive integer, got {self.lattice_size}")
        if self.dims != 1:
            raise DomainError("only one-dimensional KDE is supported")

    @property
    def lattice(self) -> np.ndarray:
        return np.arange(self.lattice_size + 1) / self.lattice_size


def kde_density(data: np.ndarray, y: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gaussian KDE on [0,1], each kernel truncated to [0,1] and renormalised."""
    x = np.asarray(data, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise DomainError("KDE needs at least one record")
    if np.any((x < 0.0) | (x > 1.0)) or not np.all(np.isfinite(x)):
        raise DomainError("KDE records must lie in [0, 1]")
    mass = ndtr((1.0 - x) / bandwidth) - ndtr(-x / bandwidth)
    z = (y[:, None] - x[None, :]) / bandwidth
    kernel = np.exp(-0.5 * z * z) / (_SQRT_2PI * bandwidth * mass[None, :])
    return kernel.mean(axis=1)


def kde_target(config: KdeConfig, n: int) -> TargetFunction:
    """KDE evaluated on the lattice {0, 1/k, ..., 1}, compared by lattice sup norm."""
    lattice = config.lattice
    return TargetFunction(
        n=n,
        evaluate=lambda records: kde_density(records, lattice, config.bandwidth),
        norm=Norm.LATTICE_SUP,
        label=f"kde(bw={config.bandwidth:g},k={config.lattice_size})",
        global_bound=kde_global_sensitivity(config, n),
    )


def kde_global_sensitivity(config: KdeConfig, n: int) -> float:
    """Largest truncated-kernel value divided by ``n``.

    The kernel peaks at a record on the boundary, evaluated at that boundary
    point, which is a lattice point; kernels are non-negative, so this bounds
    every lattice difference and is attained in the limit.
    """
    h = config.bandwidth
    return float(1.0 / (_SQRT_2PI * h * (ndtr(1.0 / h) - 0.5) * n))


# Record distributions


def gen_exponential(lam: float = 1.0) -> RecordSampler:
    if not lam > 0:
        raise DomainError(f"rate must be > 0, got {lam}")
    return RecordSampler(
        lambda rng, size: rng.exponential(1.0 / lam, size=(size, 1)), f"exp:{lam:g}"
    )


def gen_uniform_cube(d: int = 1) -> RecordSampler:
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    return RecordSampler(lambda rng, size: rng.random((size, d)), f"uniform:{d}")


def gen_two_gaussians(d: int = 2, std: float = 0.1) -> RecordSampler:
    """Equal-probability classes: +1 around 0.2 * 1, -1 around 0.8 * 1.

    Coordinates have variance 0.01 by default and are clipped to [0, 1].
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")

    def draw(rng, size):
        labels = np.where(rng.random(size) < 0.5, 1.0, -1.0)
        centre = np.where(labels > 0, 0.2, 0.8)[:, None]
        feats = np.clip(centre + std * rng.standard_normal((size, d)), 0.0, 1.0)
        return np.column_stack([feats, labels])

    return RecordSampler(draw, f"twogauss:{d}")


MIXTURE_WEIGHTS = (0.4, 0.6)
MIXTURE_MEANS = (0.5, 0.75)
MIXTURE_VARIANCES = (0.02, 0.005)


def gen_gaussian_mixture() -> RecordSampler:
    """0.4 N(0.5, 0.02) + 0.6 N(0.75, 0.005) (variances), clipped to [0, 1]."""
    stds = np.sqrt(MIXTURE_VARIANCES)

    def draw(rng, size):
        first = rng.random(size) < MIXTURE_WEIGHTS[0]
        z = rng.standard_normal(size)
        vals = np.where(first, MIXTURE_MEANS[0] + stds[0] * z, MIXTURE_MEANS[1] + stds[1] * z)
        return np.clip(vals, 0.0, 1.0)[:, None]

    return RecordSampler(draw, "mixture")


def parse_distribution(text: str) -> RecordSampler:
    """Build a sampler from ``exp:<rate>``, ``uniform:<d>``, ``twogauss:<d>`` or ``mixture``."""
    name, _, arg = text.partition(":")
    try:
        if name == "exp":
            return gen_exponential(float(arg) if arg else 1.0)
        if name == "uniform":
            return gen_uniform_cube(int(arg) if arg else 1)
        if name == "twogauss":
            return gen_two_gaussians(int(arg) if arg else 2)
    except ValueError as exc:
        raise DomainError(f"bad distribution parameter in {text!r}") from exc
    if name == "mixture" and not arg:
        return gen_gaussian_mixture()
    raise DomainError(f"unknown distribution {text!r}")


# Dataset files: one CSV record per line, features then label where present.


def load_dataset(path: str | Path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append([float(field) for field in line.split(",")])
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: not a decimal CSV record") from exc
    if not rows:
        raise DomainError(f"{path}: dataset is empty")
    if len({len(r) for r in rows}) != 1:
        raise DomainError(f"{path}: records have inconsistent widths")
    return np.array(rows, dtype=np.float64)


def format_records(records: np.ndarray) -> str:
    records = np.asarray(records, dtype=np.float64).reshape(len(records), -1)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in records)


def save_dataset(path: str | Path, records: np.ndarray) -> None:
    Path(path).write_text(format_records(records), encoding="utf-8", newline="\n")
