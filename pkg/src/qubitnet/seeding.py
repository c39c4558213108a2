"""Deterministic seed derivation and random-generator construction.

All randomness in the package flows through numpy's PCG64 generator, seeded
either directly or through seed_stream. Batches derive one independent seed
per trial so trials can run in any order, or in parallel, with identical
results.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def seed_stream(master_seed: int, trial_index: int) -> int:
    """Per-trial seed: splitmix64 finalizer over an odd-stride walk.

    The walk master + (index+1)*GAMMA mod 2^64 is injective in the index
    (GAMMA is odd) and every mixing stage is a bijection on 64-bit words, so
    distinct trial indices always yield distinct seeds for a fixed master.
    """
    z = (master_seed + (trial_index + 1) * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def make_rng(seed: int) -> np.random.Generator:
    """Construct the package-standard deterministic generator (PCG64)."""
    return np.random.Generator(np.random.PCG64(seed))
