"""Counter-based random substreams.

Every Monte-Carlo iteration gets its own Philox stream keyed by the master
seed and a purpose tag, with the iteration index in the top counter word.
Results therefore depend only on ``(master_seed, purpose, index)`` and never
on how iterations are scheduled across workers.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import DomainError

SAMPLING = 0
VERIFICATION = 1
NOISE = 2
DATA = 3

_U64 = (1 << 64) - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _U64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def substream(master_seed: int, index: int, purpose: int = SAMPLING) -> np.random.Generator:
    key = np.array([check_seed(master_seed), purpose], dtype=np.uint64)
    counter = np.array([0, 0, 0, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def seed_from_env(default: int | None = None) -> int | None:
    raw = os.environ.get("SENSIKIT_SEED")
    if raw is None or raw == "":
        return default
    try:
        return check_seed(int(raw, 0))
    except ValueError as exc:
        raise DomainError(f"SENSIKIT_SEED must be an integer, got {raw!r}") from exc
