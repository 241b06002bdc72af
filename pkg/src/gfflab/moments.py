"""Gaussian moments via perfect matchings (Wick pairings).

For a centered Gaussian vector with covariance ``C``,

    E[X_{i1} ... X_{ik}] = sum over perfect matchings M of prod C[a, b],

and the sum is empty (zero) for odd ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidInputError, ResourceError
from .green import GreensMatrix

MAX_ORDER = 12


@dataclass(frozen=True)
class PairingSum:
    k: int
    n_matchings: int
    value: float


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def perfect_matchings(k: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Matchings of ``0..k-1``; the smallest unmatched index is paired first."""

    def rec(remaining):
        if not remaining:
            yield ()
            return
        first, rest = remaining[0], remaining[1:]
        for i, partner in enumerate(rest):
            for tail in rec(rest[:i] + rest[i + 1 :]):
                yield ((first, partner),) + tail

    if k % 2:
        return iter(())
    return rec(tuple(range(k)))


def _check(C, indices, max_k):
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidInputError("covariance must be square")
    idx = [int(i) for i in indices]
    if not idx:
        raise InvalidInputError("need at least one index")
    if len(idx) > max_k:
        raise ResourceError(f"order {len(idx)} exceeds the cap of {max_k} ({double_factorial(max_k - 1)} matchings)")
    if min(idx) < 0 or max(idx) >= C.shape[0]:
        raise InvalidInputError("index out of range")
    return C, idx


def wick_moment(C, indices, max_k: int = MAX_ORDER) -> PairingSum:
    """Mixed moment ``E[prod X_i]`` summed over all pairings; repeats allowed."""
    C, idx = _check(C, indices, max_k)
    k = len(idx)
    if k % 2:
        return PairingSum(k, 0, 0.0)
    total = 0.0
    count = 0
    for m in perfect_matchings(k):
        total += math.prod(C[idx[a], idx[b]] for a, b in m)
        count += 1
    return PairingSum(k, count, total)


def schwinger(points, G: GreensMatrix, max_k: int = MAX_ORDER) -> float:
    """k-point function of the field at graph vertices ``points``."""
    rows = G.index_of(points)
    if np.any(rows < 0):
        raise InvalidInputError("Schwinger points must be covered by the Green's matrix")
    if len(rows) == 2:
        return float(G.matrix[rows[0], rows[1]])
    return wick_moment(G.matrix, rows, max_k).value


def matching_partition_weights(C, indices, max_k: int = MAX_ORDER) -> list[tuple[tuple, float, float]]:
    """Every matching with its covariance product and normalized probability."""
    C, idx = _check(C, indices, max_k)
    if len(idx) % 2:
        raise InvalidInputError("odd order has no perfect matchings")
    rows = []
    for m in perfect_matchings(len(idx)):
        w = math.prod(C[idx[a], idx[b]] for a, b in m)
        if not w > 0:
            raise InvalidInputError("a pairing weight is not positive; no probabilistic reading")
        rows.append((m, w))
    total = sum(w for _, w in rows)
    return [(m, w, w / total) for m, w in rows]


def functional_covariance(G, rhos) -> np.ndarray:
    """``rho_i^T G rho_j`` for a stack of weight vectors on ``G``'s vertices."""
    mat = G.matrix if isinstance(G, GreensMatrix) else np.asarray(G, dtype=float)
    r = np.atleast_2d(np.asarray(rhos, dtype=float))
    if isinstance(G, GreensMatrix) and r.shape[1] == G.graph.n_vertices:
        r = r[:, G.vertices]
    return r @ mat @ r.T


def empirical_moment(samples, functionals, indices, n_blocks: int = 50) -> tuple[float, float]:
    """Monte Carlo mixed moment of linear functionals with a jackknife error.

    ``samples`` is a 2D array, a batch ``FieldSample`` or any iterable of
    1D samples / batches; it is consumed once.  ``functionals`` is a matrix
    whose rows are the weight vectors (``None`` means point evaluation).
    The delete-one-block jackknife uses ``n_blocks`` contiguous blocks.
    """
    idx = [int(i) for i in indices]
    blocks = []
    count = 0
    for chunk in _chunks(samples):
        vals = chunk if functionals is None else chunk @ np.asarray(functionals, dtype=float).T
        prod = np.prod(vals[:, idx], axis=1) if idx else np.ones(len(vals))
        blocks.append(prod)
        count += len(prod)
    if count < 2:
        raise InvalidInputError("need at least two samples")
    prod = np.concatenate(blocks)
    mean = float(prod.mean())
    nb = min(n_blocks, count)
    sums = np.array([b.sum() for b in np.array_split(prod, nb)])
    sizes = np.array([len(b) for b in np.array_split(prod, nb)])
    loo = (sums.sum() - sums) / (count - sizes)
    se = float(np.sqrt((nb - 1) / nb * np.sum((loo - loo.mean()) ** 2)))
    return mean, se


def _chunks(samples):
    vals = getattr(samples, "values", samples)
    if isinstance(vals, np.ndarray):
        yield np.atleast_2d(vals)
        return
    for s in vals:
        yield np.atleast_2d(np.asarray(getattr(s, "values", s), dtype=float))
