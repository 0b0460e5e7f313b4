"""Command-line interface: ``sensikit {plan,sample,release,verify,experiment}``.

Structured results go to stdout as one JSON object (CSV for ``experiment``
without ``--out``); diagnostics go to stderr. Exit status is 0 on success,
2 on usage errors and the ``exit_code`` of the error family otherwise.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import secrets
import sys
from pathlib import Path

import numpy as np

from . import planner
from . import rng as rngmod
from .blackbox import extern_target
from .errors import DomainError, InfeasiblePlanError, InputOutputError, SensikitError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment, to_csv
from .mechanisms import Mechanism, check_sensitivity
from .sampler import (
    Norm,
    SensitivitySample,
    estimate_delta,
    sample_sensitivity,
    verify_rdp_coverage,
)
from .svm import SvmConfig, svm_target
from .targets import KdeConfig, kde_target, load_dataset, mean_target, parse_distribution

logger = logging.getLogger("sensikit")

OBJECTIVES = {"min-m": "min_m", "min-k": "min_k", "min-gamma": "min_gamma"}


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputOutputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise InputOutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _load_plan(path: str) -> planner.SamplingPlan:
    try:
        plan = planner.SamplingPlan.loads(_read_text(path))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputOutputError(f"{path}: not a sampling plan file ({exc})") from exc
    verdict = planner.validate_plan(plan)
    if not verdict:
        raise DomainError(f"{path}: invalid sampling plan: {verdict.reason}")
    return plan


def _load_sample(path: str) -> SensitivitySample:
    try:
        return SensitivitySample.loads(_read_text(path))
    except DomainError as exc:
        raise InputOutputError(f"{path}: {exc}") from exc


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return rngmod.check_seed(args.seed)
    env = rngmod.seed_from_env()
    if env is not None:
        return env
    seed = secrets.randbits(63)
    logger.warning("no --seed or SENSIKIT_SEED given; using %d", seed)
    return seed


def _build_target(args, width: int):
    name = args.target
    if name == "mean":
        return mean_target(width, args.n)
    if name == "svm":
        if width < 2:
            raise DomainError("the svm target needs labelled records, e.g. --dist twogauss:2")
        return svm_target(SvmConfig(C=args.C, d=width - 1), args.n)
    if name == "kde":
        return kde_target(KdeConfig(args.bandwidth, args.lattice_size), args.n)
    if name.startswith("extern:"):
        return extern_target(name[len("extern:"):], args.n, Norm(args.norm))
    raise DomainError(f"unknown target {name!r}; use mean, svm, kde or extern:<path>")


def _target_and_dist(args):
    if args.n is None or args.n < 1:
        raise DomainError("--n must be a positive integer")
    p = parse_distribution(args.dist)
    width = p(np.random.default_rng(0), 1).shape[1]
    return _build_target(args, width), p


def cmd_plan(args) -> int:
    if args.rho is not None:
        missing = [f for f in ("m", "k", "gamma") if getattr(args, f) is None]
        if missing:
            raise DomainError("a manual plan needs --rho, --m, --k and --gamma")
        plan = planner.SamplingPlan(args.rho, args.m, args.k, args.gamma)
        verdict = planner.validate_plan(plan)
        if not verdict:
            raise DomainError(f"invalid sampling plan: {verdict.reason}")
    elif args.objective == "min-m":
        if args.gamma is None:
            raise DomainError("--objective min-m needs --gamma")
        plan = planner.plan_min_m(args.gamma)
    elif args.objective == "min-k":
        if args.gamma is None or args.m is None:
            raise DomainError("--objective min-k needs --gamma and --m")
        plan = planner.plan_min_k(args.m, args.gamma)
    else:
        if args.m is None:
            raise DomainError("--objective min-gamma needs --m")
        plan = planner.plan_min_gamma(args.m)
    if args.out:
        _write_text(args.out, plan.dumps() + "\n")
    _emit(plan.to_dict())
    return 0


def cmd_sample(args) -> int:
    m = args.m
    if args.plan_file:
        m = _load_plan(args.plan_file).m
    if m is None:
        raise DomainError("give --m or --plan-file")
    target, p = _target_and_dist(args)
    seed = _resolve_seed(args)
    sample = sample_sensitivity(target, p, m, seed, threads=args.threads)
    if args.out:
        _write_text(args.out, sample.dumps())
    else:
        sys.stdout.write(sample.dumps())
        return 0
    _emit({
        "m": sample.m, "n": sample.n, "norm": sample.norm.value, "seed": seed,
        "target": sample.target_label, "out": args.out, "max": float(sample.values[-1]),
    })
    return 0


def _delta_hat(args) -> tuple[float, float | None]:
    if args.delta_hat is not None:
        if args.delta_hat < 0:
            raise DomainError("--delta-hat must be >= 0")
        return args.delta_hat, args.gamma
    if not (args.plan_file and args.sample_file):
        raise DomainError("give --delta-hat or both --plan-file and --sample-file")
    plan = _load_plan(args.plan_file)
    sample = _load_sample(args.sample_file)
    if sample.m != plan.m:
        raise DomainError(f"sample holds m={sample.m} values but the plan needs m={plan.m}")
    return estimate_delta(sample, plan.k), plan.gamma


def _value(args) -> np.ndarray:
    if args.value is not None:
        return np.array(args.value, dtype=np.float64)
    if args.data is None:
        raise DomainError("give --data (with --target) or --value")
    try:
        records = load_dataset(args.data)
    except OSError as exc:
        raise InputOutputError(f"cannot read {args.data}: {exc.strerror or exc}") from exc
    args.n = records.shape[0]
    target = _build_target(args, records.shape[1])
    return target(records)


def cmd_release(args) -> int:
    delta_hat, gamma = _delta_hat(args)
    mechanism = Mechanism(
        kind=args.mechanism,
        epsilon=args.epsilon,
        dp_delta=args.delta or 0.0,
        lattice_size=args.lattice_size,
        dims=1,
        order=args.order,
        allow_degenerate=args.allow_degenerate,
    )
    # Refuse a zero sensitivity before touching the data.
    check_sensitivity(delta_hat, args.allow_degenerate)
    value = _value(args)
    seed = _resolve_seed(args)
    release = mechanism.respond(value, delta_hat, rngmod.substream(seed, 0, rngmod.NOISE))
    release = dataclasses.replace(release, gamma=gamma)
    text = release.dumps()
    if args.out:
        _write_text(args.out, text + "\n")
    sys.stdout.write(text + "\n")
    return 0


def cmd_verify(args) -> int:
    delta_hat, gamma = _delta_hat(args)
    target, p = _target_and_dist(args)
    seed = _resolve_seed(args)
    coverage = verify_rdp_coverage(target, p, delta_hat, args.trials, seed, args.threads)
    out = {"delta_hat": delta_hat, "trials": args.trials, "coverage": coverage, "seed": seed}
    if gamma is not None:
        out.update(gamma=gamma, meets_confidence=coverage >= 1.0 - gamma)
    _emit(out)
    return 0


def cmd_experiment(args) -> int:
    seed = _resolve_seed(args)
    config = ExperimentConfig(
        experiment=args.name,
        gammas=tuple(args.gamma or ()),
        epsilons=tuple(args.epsilon or ()),
        dims=tuple(args.d or ()),
        ms=tuple(args.m or ()),
        orders=tuple(args.order or ()),
        repeats=args.repeats,
        n=args.n,
        master_seed=seed,
        threads=args.threads,
        paper_scale=args.paper_scale,
    )
    rows = run_experiment(config)
    text = to_csv(args.name, rows)
    if args.out:
        _write_text(args.out, text)
        _emit({"experiment": args.name, "rows": len(rows), "out": args.out, "seed": seed})
    else:
        sys.stdout.write(text)
    return 0


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensikit", description="Sensitivity sampling for random differential privacy."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def seeded(p):
        p.add_argument("--seed", type=lambda s: int(s, 0), help="master seed (default: $SENSIKIT_SEED)")
        p.add_argument("--threads", type=_positive_int, default=1)

    def targeted(p, need_dist=True):
        p.add_argument("--target", default="mean", help="mean, svm, kde or extern:<program>")
        if need_dist:
            p.add_argument("--dist", required=True, help="exp:<rate>, uniform:<d>, twogauss:<d> or mixture")
        p.add_argument("--n", type=_positive_int, help="database size")
        p.add_argument("--C", type=float, default=3.0, help="SVM regularisation")
        p.add_argument("--bandwidth", type=float, default=0.05, help="KDE bandwidth")
        p.add_argument("--lattice-size", type=_positive_int, default=10)
        p.add_argument("--norm", choices=[n.value for n in Norm], default="L1",
                       help="output norm for extern targets")

    def estimate(p):
        p.add_argument("--plan-file")
        p.add_argument("--sample-file")
        p.add_argument("--delta-hat", type=float, help="use this sensitivity instead of a sample")
        p.add_argument("--gamma", type=float, help="confidence to report with --delta-hat")

    p = sub.add_parser("plan", help="choose (rho, m, k) for a confidence level")
    p.add_argument("--objective", choices=sorted(OBJECTIVES), default="min-m")
    p.add_argument("--gamma", type=float)
    p.add_argument("--m", type=_positive_int)
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--rho", type=float, help="validate a manual plan given with --m --k --gamma")
    p.add_argument("--out", help="also write the plan JSON here")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sample", help="measure sensitivities of a target")
    targeted(p)
    seeded(p)
    p.add_argument("--m", type=_positive_int)
    p.add_argument("--plan-file")
    p.add_argument("--out", help="sample file (stdout when omitted)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("release", help="privatise a value with a sampled sensitivity")
    targeted(p, need_dist=False)
    seeded(p)
    estimate(p)
    p.add_argument("--mechanism", choices=["laplace", "gaussian", "exponential", "bernstein"],
                   default="laplace")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, help="approximate-DP delta for the gaussian mechanism")
    p.add_argument("--order", type=_positive_int, default=1, help="Bernstein iteration order")
    p.add_argument("--data", help="dataset CSV evaluated with --target")
    p.add_argument("--value", type=float, nargs="+", help="release this vector directly")
    p.add_argument("--allow-degenerate", action="store_true",
                   help="release without noise when the sensitivity is 0")
    p.add_argument("--out")
    p.set_defaults(func=cmd_release)

    p = sub.add_parser("verify", help="estimate how often fresh pairs stay within delta_hat")
    targeted(p)
    seeded(p)
    estimate(p)
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="run a reproducible experiment and emit CSV")
    p.add_argument("name", choices=EXPERIMENTS)
    seeded(p)
    p.add_argument("--gamma", type=float, nargs="+")
    p.add_argument("--epsilon", type=float, nargs="+")
    p.add_argument("--d", type=_positive_int, nargs="+")
    p.add_argument("--m", type=_positive_int, nargs="+")
    p.add_argument("--order", type=_positive_int, nargs="+")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--repeats", type=_positive_int)
    p.add_argument("--paper-scale", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="sensikit: %(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except InfeasiblePlanError as exc:
        print(f"sensikit: infeasible plan: {exc}", file=sys.stderr)
        return exc.exit_code
    except SensikitError as exc:
        print(f"sensikit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"sensikit: I/O error: {exc}", file=sys.stderr)
        return InputOutputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
