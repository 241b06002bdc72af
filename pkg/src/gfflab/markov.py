"""Domain Markov decomposition and exploration martingales on graphs.

Given the field outside a vertex set ``U``, the field on ``U`` is the
harmonic extension of the outside values plus an independent DGFF on ``U``
(Green's matrix ``L_UU^{-1}``).  Revealing interior vertices one at a time
turns ``(h, f0)_grad`` into a martingale whose quadratic variation is
``||P_k f0||^2_grad``, ``P_k`` being the projection onto functions that are
harmonic off the revealed set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInputError
from .green import GreensMatrix, _dense_cholesky, dirichlet_solve, solve_form
from .lattice import WeightedGraph, dirichlet_energy, values_of


def _as_subset(g: WeightedGraph, U) -> np.ndarray:
    U = np.unique(np.asarray(U, dtype=np.int64).reshape(-1))
    if U.size == 0:
        raise InvalidInputError("U must be non-empty")
    if U[0] < 0 or U[-1] >= g.n_vertices:
        raise InvalidInputError("U contains an unknown vertex")
    if np.any(g.is_boundary[U]):
        raise InvalidInputError("U must consist of interior vertices")
    if U.size == g.n_vertices:
        raise InvalidInputError("U has no exterior: nothing to condition on")
    return U


def conditional_law(g: WeightedGraph, U, exterior_values) -> tuple[np.ndarray, GreensMatrix]:
    """Law of the field on ``U`` given its values everywhere else.

    Returns the conditional mean on ``U`` (sorted ids) and its covariance,
    the Green's matrix of ``U`` with the outside vertices as boundary.  The
    covariance depends on ``(g, U)`` only.
    """
    U = _as_subset(g, U)
    vals = values_of(exterior_values, g.n_vertices)
    mean = dirichlet_solve(g, U, vals)[..., U]
    lap = g.laplacian[U][:, U].toarray()
    cov = sla.cho_solve(_dense_cholesky(lap), np.eye(len(U)))
    return mean, GreensMatrix(g, U, 0.5 * (cov + cov.T))


def decompose(g: WeightedGraph, U, field) -> tuple[np.ndarray, np.ndarray]:
    """Split a field into a part harmonic on ``U`` and a part supported on ``U``.

    The two parts are orthogonal for the Dirichlet form.  Batches are
    accepted along the leading axis.
    """
    U = _as_subset(g, U)
    vals = values_of(field, g.n_vertices)
    harmonic = dirichlet_solve(g, U, vals)
    return harmonic, vals - harmonic


# ---------------------------------------------------------------- exploration


@dataclass(frozen=True, eq=False)
class ExplorationTrace:
    """``(t_k, W_k)`` after revealing the first ``k`` vertices of ``ordering``.

    ``values`` has shape ``(n+1,)`` or ``(n_samples, n+1)``; ``projections[k]``
    is ``P_k f0`` as a full-length vector.
    """

    ordering: np.ndarray
    times: np.ndarray
    values: np.ndarray
    projections: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


def default_f0(g: WeightedGraph) -> np.ndarray:
    """Solution of ``L f = const`` on the interior, scaled to unit Dirichlet norm."""
    if g.zero_mean_mode:
        raise InvalidInputError("exploration needs a pinned boundary")
    f = np.zeros(g.n_vertices)
    f[g.interior] = solve_form(g, np.ones(len(g.interior)))
    return f / np.sqrt(dirichlet_energy(g, f))


def boustrophedon_order(g: WeightedGraph) -> np.ndarray:
    """Interior vertices swept row by row, alternating direction.

    Rows follow the first grid axis (or the first coordinate); graphs without
    a layout fall back to id order.
    """
    inner = g.interior
    if g.grid_shape is not None and len(g.grid_shape) >= 2:
        coords = np.stack(np.unravel_index(inner, g.grid_shape), axis=1)
    elif g.positions is not None and g.positions.shape[1] >= 2:
        coords = g.positions[inner]
    else:
        return np.array(inner)
    row = coords[:, 0]
    col = coords[:, 1]
    rank = np.unique(row, return_inverse=True)[1]
    col = np.where(rank % 2 == 0, col, -col)
    return inner[np.lexsort((col, row))]


def exploration_projections(g: WeightedGraph, f0, ordering) -> tuple[np.ndarray, np.ndarray]:
    """``P_k f0`` for ``k = 0..n`` and the times ``||P_k f0||^2``."""
    f0 = values_of(f0, g.n_vertices)
    if np.any(f0[g.boundary] != 0):
        raise InvalidInputError("f0 must vanish on the boundary")
    ordering = np.asarray(ordering, dtype=np.int64)
    if len(ordering) != len(g.interior) or not np.array_equal(np.sort(ordering), g.interior):
        raise InvalidInputError("ordering must be a permutation of the interior vertices")
    n = len(ordering)
    proj = np.empty((n + 1, g.n_vertices))
    for k in range(n + 1):
        # unrevealed vertices are re-solved; revealed ones and the boundary keep f0's values
        proj[k] = dirichlet_solve(g, np.sort(ordering[k:]), f0)
    return proj, np.atleast_1d(dirichlet_energy(g, proj))


def explore(g: WeightedGraph, f0, ordering, field) -> ExplorationTrace:
    """Exploration martingale ``W_k = E[(h, f0)_grad | first k reveals]``.

    Uses ``W_k = (h, P_k f0)_grad``; ``field`` may be a batch.
    """
    proj, times = exploration_projections(g, f0, ordering)
    vals = values_of(field, g.n_vertices)
    lap = g.laplacian
    values = vals @ (lap @ proj.T)
    return ExplorationTrace(np.asarray(ordering), times, values, proj)


def explore_functional(trace: ExplorationTrace, terms) -> np.ndarray:
    """Martingale of ``f = sum a_i P_{s_i} f0``: ``W_f(k) = sum a_i W(min(s_i, k))``.

    ``terms`` is an iterable of ``(a_i, s_i)`` with ``s_i`` a reveal index.
    """
    n = len(trace.times) - 1
    k = np.arange(n + 1)
    out = np.zeros(trace.values.shape)
    for a, s in terms:
        if int(s) != s or not 0 <= s <= n:
            raise InvalidInputError(f"{s} is not a reveal index")
        out = out + a * trace.values[..., np.minimum(int(s), k)]
    return out
