"""Seeded random streams.

Every random draw in the package comes from a ``numpy.random.Generator``
backed by PCG64 and keyed by a :class:`numpy.random.SeedSequence`.  Child
streams are derived with ``SeedSequence.spawn``-style keys, so a single
64-bit seed fans out into independent, reproducible streams.  Normal
variates use NumPy's ziggurat method, which is exact.
"""

from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MASK:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``seed``; extra integers select an independent sub-stream."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def child_seeds(seed: int, n: int) -> list[int]:
    """``n`` derived 64-bit seeds, stable across platforms."""
    ss = np.random.SeedSequence(_check_seed(seed))
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(n)]
