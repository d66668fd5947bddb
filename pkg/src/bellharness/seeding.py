"""Deterministic stream derivation from a single 64-bit master seed.

Every random draw in the harness comes from a numpy Generator derived
here, so a run is a pure function of its seed.  Streams are derived with
SeedSequence entropy ``[master_seed, *key]``; distinct keys give
statistically independent streams without any shared state.
"""

from __future__ import annotations

import numpy as np

MAX_SEED = 2**64

# Stream keys for one experiment run; fixed, part of the wire contract.
REFEREE_STREAM = 0  # fair-coin setting choices
SOURCE_STREAM = 1  # hidden-variable draws
STATION_A_STREAM = 2  # station A auxiliary draws
STATION_B_STREAM = 3  # station B auxiliary draws
AUDIT_STREAM = 4  # audit-only draws (shuffle permutations)


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= seed < MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return int(seed)


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for stream ``key`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([check_seed(seed), *key]))


def derive_seed(seed: int, *key: int) -> int:
    """A fresh 64-bit seed for a sub-run (sweep point, repetition, ...).

    Deterministic in (seed, key); sub-runs with distinct keys are
    independent.
    """
    state = np.random.SeedSequence([check_seed(seed), *key]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
