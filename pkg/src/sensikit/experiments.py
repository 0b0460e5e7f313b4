"""Desk-scale reproductions of the sensitivity and utility experiments.

Each experiment is a pure function of its :class:`ExperimentConfig`
(including ``master_seed``) and produces one CSV row per grid point. Noise
draws are shared between the sampled-sensitivity and global-bound arms of a
repeat (common random numbers), so the two arms differ only in scale.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
from pathlib import Path

import numpy as np

from . import planner
from .errors import DomainError, InfeasiblePlanError, SensikitError
from .mechanisms import bernstein_basis, bernstein_noise_scale, iterated_coefficients, laplace_noise
from .sampler import estimate_delta, sample_sensitivity
from .svm import SvmConfig, misclassification, svm_global_sensitivity, svm_target, svm_train
from .targets import (
    KdeConfig,
    gen_exponential,
    gen_gaussian_mixture,
    gen_two_gaussians,
    gen_uniform_cube,
    kde_density,
    kde_global_sensitivity,
    kde_target,
    mean_target,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

COLUMNS = {
    "analytic_vs_sampled": [
        "gamma", "m", "k", "rho", "objective", "n", "repeats",
        "delta_analytic", "delta_sampled_mean", "delta_sampled_sd",
    ],
    "bounded_mean": [
        "d", "gamma", "n", "m", "k", "repeats",
        "delta_global", "delta_sampled_mean", "delta_sampled_max", "g_max",
    ],
    "svm_sensitivity": [
        "d", "gamma", "n", "C", "m", "k", "repeats",
        "delta_hat_mean", "delta_hat_max", "delta_global", "ratio",
    ],
    "svm_utility": [
        "epsilon", "d", "gamma", "n", "C", "m", "k", "repeats",
        "delta_hat", "delta_global", "error_sampled", "error_global", "error_nonprivate",
    ],
    "kde_utility": [
        "epsilon", "order", "gamma", "n", "m", "k", "lattice_size", "repeats",
        "delta_hat", "delta_global", "error_sampled", "error_global", "error_bernstein",
    ],
}

EXPERIMENTS = tuple(COLUMNS)

_DESK = {
    "analytic_vs_sampled": dict(gammas=(0.05, 0.1, 0.2, 0.3), n=1000, repeats=50),
    "bounded_mean": dict(gammas=(0.05, 0.1, 0.2, 0.3), dims=(1,), n=500, repeats=10),
    "svm_sensitivity": dict(gammas=(0.05, 0.1, 0.2, 0.3), dims=(2, 4, 8), ms=(1500,), n=200, repeats=1),
    "svm_utility": dict(
        gammas=(0.05,), dims=(2,), ms=(1500,), n=200, repeats=100,
        epsilons=(0.1, 0.3, 1.0, 3.0, 10.0),
    ),
    "kde_utility": dict(
        gammas=(0.05,), ms=(5000,), n=1000, repeats=100, orders=(1, 3),
        epsilons=(0.1, 0.3, 1.0, 3.0, 10.0, 100.0),
    ),
}

_PAPER = {
    "svm_sensitivity": dict(dims=(8, 16, 32, 64), n=1000),
    "svm_utility": dict(n=1000, repeats=500),
    "kde_utility": dict(ms=(50000,), n=5000, repeats=1000, orders=(3,)),
}


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Grids and scale for one experiment; empty/None fields take per-experiment defaults."""

    experiment: str
    gammas: tuple[float, ...] = ()
    epsilons: tuple[float, ...] = ()
    dims: tuple[int, ...] = ()
    ms: tuple[int, ...] = ()
    orders: tuple[int, ...] = ()
    repeats: int | None = None
    n: int | None = None
    master_seed: int = 0
    out: Path | None = None
    threads: int = 1
    paper_scale: bool = False
    C: float = 3.0
    rate: float = 1.0
    lattice_size: int = 10
    bandwidth: float = 0.05
    test_size: int = 2000

    def resolved(self) -> "ExperimentConfig":
        if self.experiment not in COLUMNS:
            raise DomainError(
                f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}"
            )
        defaults = dict(_DESK[self.experiment])
        if self.paper_scale:
            defaults.update(_PAPER.get(self.experiment, {}))
        updates = {}
        for name, value in defaults.items():
            if getattr(self, name) in ((), None):
                updates[name] = value
        cfg = dataclasses.replace(self, **updates)
        if cfg.repeats is None or cfg.repeats < 1:
            raise DomainError("repeats must be >= 1")
        for name in ("gammas", "epsilons", "dims", "ms", "orders"):
            if name in defaults and not getattr(cfg, name):
                raise DomainError(f"{name} grid must be non-empty")
        return cfg


def derive_seed(master_seed: int, *tags) -> int:
    words = [int(master_seed)] + [int(t) if isinstance(t, (int, np.integer)) else _tag(t) for t in tags]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def _tag(text) -> int:
    return int.from_bytes(str(text).encode("utf-8")[:8].ljust(8, b"\0"), "little")


def _plan_for(m: int | None, gamma: float) -> planner.SamplingPlan:
    return planner.plan_min_m(gamma) if m is None else planner.plan_min_k(m, gamma)


def _analytic_vs_sampled(cfg):
    p = gen_exponential(cfg.rate)
    target = mean_target(1, cfg.n)
    rows = []
    budgets = cfg.ms or (None,)
    for m_budget in budgets:
        plans = []
        for gamma in cfg.gammas:
            try:
                plans.append(_plan_for(m_budget, gamma))
            except InfeasiblePlanError as exc:
                logger.warning("skipping gamma=%g at m=%s: %s", gamma, m_budget, exc)
        estimates = {id(pl): [] for pl in plans}
        for rep in range(cfg.repeats):
            cache = {}
            for pl in plans:
                if pl.m not in cache:
                    seed = derive_seed(cfg.master_seed, "avs", pl.m, rep)
                    cache[pl.m] = sample_sensitivity(target, p, pl.m, seed, cfg.threads)
                estimates[id(pl)].append(estimate_delta(cache[pl.m], pl.k))
        for pl in plans:
            est = np.array(estimates[id(pl)])
            rows.append(dict(
                gamma=pl.gamma, m=pl.m, k=pl.k, rho=pl.rho, objective=pl.objective.value,
                n=cfg.n, repeats=cfg.repeats,
                delta_analytic=float(np.log(1.0 / pl.gamma) / (cfg.rate * cfg.n)),
                delta_sampled_mean=float(est.mean()),
                delta_sampled_sd=float(est.std(ddof=1)) if est.size > 1 else 0.0,
            ))
    return rows


def _bounded_mean(cfg):
    rows = []
    for d in cfg.dims:
        target = mean_target(d, cfg.n, unit_cube=True)
        p = gen_uniform_cube(d)
        for gamma in cfg.gammas:
            pl = planner.plan_min_m(gamma)
            est, gmax = [], 0.0
            for rep in range(cfg.repeats):
                seed = derive_seed(cfg.master_seed, "bounded", d, pl.m, rep)
                sample = sample_sensitivity(target, p, pl.m, seed, cfg.threads)
                est.append(estimate_delta(sample, pl.k))
                gmax = max(gmax, float(sample.values[-1]))
            rows.append(dict(
                d=d, gamma=gamma, n=cfg.n, m=pl.m, k=pl.k, repeats=cfg.repeats,
                delta_global=target.global_bound,
                delta_sampled_mean=float(np.mean(est)),
                delta_sampled_max=float(np.max(est)),
                g_max=gmax,
            ))
    return rows


def _svm_sensitivity(cfg):
    rows = []
    for d in cfg.dims:
        target = svm_target(SvmConfig(C=cfg.C, d=d), cfg.n)
        p = gen_two_gaussians(d)
        for m in cfg.ms:
            samples = [
                sample_sensitivity(
                    target, p, m, derive_seed(cfg.master_seed, "svmsens", d, m, rep), cfg.threads
                )
                for rep in range(cfg.repeats)
            ]
            for gamma in cfg.gammas:
                try:
                    pl = planner.plan_min_k(m, gamma)
                except InfeasiblePlanError as exc:
                    logger.warning("skipping gamma=%g at m=%d: %s", gamma, m, exc)
                    continue
                est = np.array([estimate_delta(s, pl.k) for s in samples])
                rows.append(dict(
                    d=d, gamma=gamma, n=cfg.n, C=cfg.C, m=m, k=pl.k, repeats=cfg.repeats,
                    delta_hat_mean=float(est.mean()), delta_hat_max=float(est.max()),
                    delta_global=target.global_bound,
                    ratio=float(target.global_bound / est.max()) if est.max() > 0 else float("inf"),
                ))
    return rows


def _svm_utility(cfg):
    rows = []
    for d in cfg.dims:
        svm_cfg = SvmConfig(C=cfg.C, d=d)
        target = svm_target(svm_cfg, cfg.n)
        p = gen_two_gaussians(d)
        delta_global = svm_global_sensitivity(cfg.C, d, cfg.n)
        test = p(np.random.default_rng(derive_seed(cfg.master_seed, "svmtest", d)), cfg.test_size)
        for m in cfg.ms:
            sample = sample_sensitivity(
                target, p, m, derive_seed(cfg.master_seed, "svmutil", d, m), cfg.threads
            )
            for gamma in cfg.gammas:
                try:
                    pl = planner.plan_min_k(m, gamma)
                except InfeasiblePlanError as exc:
                    logger.warning("skipping gamma=%g at m=%d: %s", gamma, m, exc)
                    continue
                delta_hat = estimate_delta(sample, pl.k)
                err_np = []
                err_s = np.zeros((cfg.repeats, len(cfg.epsilons)))
                err_g = np.zeros_like(err_s)
                for rep in range(cfg.repeats):
                    rng = np.random.default_rng(derive_seed(cfg.master_seed, "svmrep", d, rep))
                    train = p(rng, cfg.n)
                    vec = svm_train(train, svm_cfg).as_vector()
                    err_np.append(misclassification(vec[:-1], vec[-1], test))
                    z = laplace_noise(rng, 1.0, vec.shape)
                    for j, eps in enumerate(cfg.epsilons):
                        for scale, sink in ((delta_hat / eps, err_s), (delta_global / eps, err_g)):
                            noisy = vec + scale * z
                            sink[rep, j] = misclassification(noisy[:-1], noisy[-1], test)
                for j, eps in enumerate(cfg.epsilons):
                    rows.append(dict(
                        epsilon=eps, d=d, gamma=gamma, n=cfg.n, C=cfg.C, m=m, k=pl.k,
                        repeats=cfg.repeats, delta_hat=delta_hat, delta_global=delta_global,
                        error_sampled=float(err_s[:, j].mean()),
                        error_global=float(err_g[:, j].mean()),
                        error_nonprivate=float(np.mean(err_np)),
                    ))
    return rows


def _kde_utility(cfg):
    kde_cfg = KdeConfig(bandwidth=cfg.bandwidth, lattice_size=cfg.lattice_size)
    k = kde_cfg.lattice_size
    target = kde_target(kde_cfg, cfg.n)
    p = gen_gaussian_mixture()
    delta_global = float(kde_global_sensitivity(kde_cfg, cfg.n))
    grid = np.linspace(0.0, 1.0, 201)
    basis = bernstein_basis(k, grid)
    operators = {h: basis @ iterated_coefficients(k, h) for h in cfg.orders}
    rows = []
    for m in cfg.ms:
        sample = sample_sensitivity(
            target, p, m, derive_seed(cfg.master_seed, "kde", m), cfg.threads
        )
        plans = []
        for gamma in cfg.gammas:
            try:
                plans.append(planner.plan_min_k(m, gamma))
            except InfeasiblePlanError as exc:
                logger.warning("skipping gamma=%g at m=%d: %s", gamma, m, exc)
        deltas = [estimate_delta(sample, pl.k) for pl in plans]
        shape = (len(plans), len(cfg.orders), len(cfg.epsilons), cfg.repeats)
        err_s, err_g = np.zeros(shape), np.zeros(shape)
        err_b = np.zeros((len(cfg.orders), cfg.repeats))
        for rep in range(cfg.repeats):
            rng = np.random.default_rng(derive_seed(cfg.master_seed, "kderep", rep))
            data = p(rng, cfg.n)
            truth = kde_density(data, grid, kde_cfg.bandwidth)
            lattice_vals = target(data)
            z = laplace_noise(rng, 1.0, lattice_vals.shape)
            for hi, h in enumerate(cfg.orders):
                op = operators[h]
                bias = op @ lattice_vals - truth
                spread = op @ z
                err_b[hi, rep] = np.abs(bias).max()
                for ei, eps in enumerate(cfg.epsilons):
                    scale_g = bernstein_noise_scale(delta_global, eps, k, 1)
                    g_err = np.abs(bias + scale_g * spread).max()
                    for pi, delta_hat in enumerate(deltas):
                        scale_s = bernstein_noise_scale(delta_hat, eps, k, 1)
                        err_s[pi, hi, ei, rep] = np.abs(bias + scale_s * spread).max()
                        err_g[pi, hi, ei, rep] = g_err
        for pi, pl in enumerate(plans):
            for hi, h in enumerate(cfg.orders):
                for ei, eps in enumerate(cfg.epsilons):
                    rows.append(dict(
                        epsilon=eps, order=h, gamma=pl.gamma, n=cfg.n, m=m, k=pl.k,
                        lattice_size=k, repeats=cfg.repeats,
                        delta_hat=deltas[pi], delta_global=delta_global,
                        error_sampled=float(err_s[pi, hi, ei].mean()),
                        error_global=float(err_g[pi, hi, ei].mean()),
                        error_bernstein=float(err_b[hi].mean()),
                    ))
    return rows


_RUNNERS = {
    "analytic_vs_sampled": _analytic_vs_sampled,
    "bounded_mean": _bounded_mean,
    "svm_sensitivity": _svm_sensitivity,
    "svm_utility": _svm_utility,
    "kde_utility": _kde_utility,
}


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(experiment: str, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# sensikit-experiment v{SCHEMA_VERSION} {experiment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    columns = COLUMNS[experiment]
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format(row[c]) for c in columns])
    return buf.getvalue()


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """Run one experiment; write its CSV to ``config.out`` when set and return the rows."""
    cfg = config.resolved()
    try:
        rows = _RUNNERS[cfg.experiment](cfg)
    except SensikitError as exc:
        raise type(exc)(f"{cfg.experiment}: {exc}") from exc
    if cfg.out is not None:
        Path(cfg.out).write_text(to_csv(cfg.experiment, rows), encoding="utf-8", newline="\n")
    return rows
