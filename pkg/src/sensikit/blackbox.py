"""Targets backed by an external program.

Protocol: the program is started once per evaluation, receives ``n`` CSV
record lines on stdin followed by end-of-stream, and prints a single line of
space-separated decimals (the output vector) on stdout. It must be
deterministic; the sampler double-evaluates the first database to check.
"""

from __future__ import annotations

import shlex
import subprocess
from pathlib import Path

import numpy as np

from .errors import DomainError, TargetEvaluationError
from .sampler import Norm, TargetFunction
from .targets import format_records

DEFAULT_TIMEOUT = 60.0


def run_program(command: list[str], records: np.ndarray, timeout: float = DEFAULT_TIMEOUT) -> np.ndarray:
    try:
        proc = subprocess.run(
            command,
            input=format_records(records),
            capture_output=True,
            text=True,
            timeout=timeout,
            check=False,
        )
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise TargetEvaluationError(f"could not run {command[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        stderr = proc.stderr.strip().splitlines()
        detail = stderr[-1] if stderr else "no stderr"
        raise TargetEvaluationError(
            f"{command[0]!r} exited with status {proc.returncode}: {detail}"
        )
    lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
    if len(lines) != 1:
        raise TargetEvaluationError(
            f"{command[0]!r} must print exactly one output line, got {len(lines)}"
        )
    try:
        return np.array([float(tok) for tok in lines[0].split()], dtype=np.float64)
    except ValueError as exc:
        raise TargetEvaluationError(f"{command[0]!r} printed a non-decimal output") from exc


def extern_target(
    program: str | Path,
    n: int,
    norm: Norm = Norm.L1,
    timeout: float = DEFAULT_TIMEOUT,
) -> TargetFunction:
    """Wrap an executable as a target.

    ``program`` may include arguments (shell-quoted); the first word must be
    an existing path or a command on PATH.
    """
    command = shlex.split(str(program))
    if not command:
        raise DomainError("empty external program")
    return TargetFunction(
        n=n,
        evaluate=lambda records: run_program(command, records, timeout),
        norm=norm,
        label=f"extern:{program}",
        verify_determinism=True,
    )
