"""Deterministic RNG substream derivation.

All randomness in the package flows from one 64-bit seed through a fixed
derivation tree::

    root seed -> (purpose, block) -> generator

``purpose`` is a registered label (see PURPOSES) and ``block`` an integer
index (path block, worker chunk, lag index, ...).  The child generator is
built from ``SeedSequence((seed, purpose_id, block))``, so a stream depends
only on (seed, purpose, block) and never on worker count or call order.
Estimators that split work across blocks therefore return bit-identical
results for any number of workers.
"""

from __future__ import annotations

import numpy as np

PURPOSES = {
    "base_points": 1,
    "fiber": 2,
    "signs": 3,
    "poisson_counts": 4,
    "bit_extension": 5,
    "coord_extension": 6,
    "diagnostics": 7,
    "paths": 8,
    "oracle": 9,
    "validation": 10,
    "lk_base": 11,
    "lk_fiber": 12,
    "idp_base": 13,
    "idp_fiber": 14,
}


def purpose_id(purpose: str) -> int:
    try:
        return PURPOSES[purpose]
    except KeyError:
        raise ValueError(f"unknown RNG purpose {purpose!r}; register it in rng.PURPOSES")


def substream(seed: int, purpose: str, block: int = 0) -> np.random.Generator:
    """Generator for (seed, purpose, block); independent across distinct keys."""
    ss = np.random.SeedSequence((int(seed), purpose_id(purpose), int(block)))
    return np.random.Generator(np.random.PCG64(ss))


def child_sequences(seed: int, purpose: str, n: int, block: int = 0):
    """n child SeedSequences for per-object streams (e.g. lazy point tails)."""
    ss = np.random.SeedSequence((int(seed), purpose_id(purpose), int(block)))
    return ss.spawn(n)
