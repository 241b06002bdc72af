"""Discrete Green's functions, harmonic extension and walk occupation times.

``G = L_red^{-1}`` on boundary-pinned graphs and the Laplacian pseudoinverse
on zero-mean graphs.  The same matrix is the field covariance and the
expected occupation time of the continuous-time walk that jumps along edge
``e`` at rate ``w(e)`` and is absorbed on the boundary.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidInputError, NumericalError, ResourceError, UnsupportedGraphError
from .lattice import FieldFunction, WeightedGraph, is_uniform_box, values_of
from .rng import make_rng

DENSE_GREEN_CAP = 4000
ITERATIVE_RTOL = 1e-10

_factor_cache: "weakref.WeakKeyDictionary[WeightedGraph, object]" = weakref.WeakKeyDictionary()


@dataclass(frozen=True, eq=False)
class GreensMatrix:
    """Dense covariance matrix over ``vertices`` (graph ids).

    For pinned graphs ``vertices`` is the interior; for zero-mean graphs it is
    every vertex and ``matrix`` is the Laplacian pseudoinverse.
    """

    graph: WeightedGraph
    vertices: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        pos = np.full(self.graph.n_vertices, -1, dtype=np.int64)
        pos[self.vertices] = np.arange(len(self.vertices))
        object.__setattr__(self, "_pos", pos)

    def index_of(self, ids) -> np.ndarray:
        """Row positions of vertex ids (-1 for vertices outside the matrix)."""
        return self._pos[np.asarray(ids, dtype=np.int64)]

    def __call__(self, x: int, y: int) -> float:
        """``G(x, y)``; zero whenever either vertex is pinned."""
        i, j = self._pos[x], self._pos[y]
        if i < 0 or j < 0:
            return 0.0
        return float(self.matrix[i, j])

    def submatrix(self, ids) -> np.ndarray:
        idx = self.index_of(ids)
        if np.any(idx < 0):
            raise InvalidInputError("vertex not covered by this Green's matrix")
        return self.matrix[np.ix_(idx, idx)]

    def full(self) -> np.ndarray:
        """``n_vertices x n_vertices`` matrix with zero rows/columns on the boundary."""
        out = np.zeros((self.graph.n_vertices, self.graph.n_vertices))
        out[np.ix_(self.vertices, self.vertices)] = self.matrix
        return out


def _dense_cholesky(a: np.ndarray):
    try:
        return sla.cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(a)
        raise NumericalError(f"Cholesky factorization failed (condition number {cond:.3e})") from exc


def greens_matrix(g: WeightedGraph, max_dense: int = DENSE_GREEN_CAP) -> GreensMatrix:
    """Exact dense Green's matrix by factorization of the reduced Laplacian."""
    if g.zero_mean_mode:
        n = g.n_vertices
        if n > max_dense:
            raise ResourceError(f"dense pseudoinverse capped at {max_dense} vertices; use green_column")
        # (L + 11^T/n)^{-1} = L^+ + 11^T/n for connected L
        shifted = g.laplacian.toarray() + 1.0 / n
        fac = _dense_cholesky(shifted)
        mat = sla.cho_solve(fac, np.eye(n)) - 1.0 / n
        vertices = np.arange(n)
    else:
        vertices = g.interior
        if len(vertices) > max_dense:
            raise ResourceError(f"dense Green's matrix capped at {max_dense} interior vertices; use green_column")
        if len(vertices) == 0:
            mat = np.zeros((0, 0))
        else:
            fac = _dense_cholesky(g.reduced_laplacian.toarray())
            mat = sla.cho_solve(fac, np.eye(len(vertices)))
    mat = 0.5 * (mat + mat.T)
    return GreensMatrix(g, np.asarray(vertices), mat)


# ---------------------------------------------------------------- sparse solves


class _Solver:
    """Sparse LU of an SPD matrix with a CG fallback."""

    def __init__(self, a: sp.spmatrix):
        self.a = sp.csc_matrix(a)
        try:
            self.lu = spla.splu(self.a)
        except RuntimeError:
            self.lu = None

    def __call__(self, b: np.ndarray) -> np.ndarray:
        if self.lu is not None:
            x = self.lu.solve(np.asarray(b, dtype=float))
            if np.all(np.isfinite(x)):
                return x
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            return self._cg(b)
        return np.stack([self._cg(col) for col in b.T], axis=1)

    def _cg(self, b: np.ndarray) -> np.ndarray:
        x, info = spla.cg(self.a, b, rtol=ITERATIVE_RTOL, atol=0.0, maxiter=10 * self.a.shape[0])
        resid = np.linalg.norm(self.a @ x - b) / max(np.linalg.norm(b), 1e-300)
        if info != 0 or resid > ITERATIVE_RTOL:
            raise NumericalError(f"iterative solve did not converge (relative residual {resid:.2e})")
        return x


class _SineSolver:
    """Exact inverse of a uniform box Laplacian through the orthonormal DST-I."""

    def __init__(self, g: WeightedGraph):
        self.inner = tuple(s - 2 for s in g.grid_shape)
        self.lam = box_eigenvalues(g)

    def __call__(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        cols = b.reshape(self.inner + (-1,))
        axes = tuple(range(len(self.inner)))
        spec = sfft.dstn(cols, type=1, norm="ortho", axes=axes)
        spec /= self.lam[..., None]
        return sfft.dstn(spec, type=1, norm="ortho", axes=axes).reshape(b.shape)


def box_eigenvalues(g: WeightedGraph) -> np.ndarray:
    """Reduced-Laplacian eigenvalues of a uniform box lattice on the interior grid."""
    inner = tuple(s - 2 for s in g.grid_shape)
    lam = np.zeros(inner)
    for axis, m in enumerate(inner):
        shape = [1] * len(inner)
        shape[axis] = m
        modes = np.arange(1, m + 1)
        lam = lam + (g.weights[0] * (2.0 - 2.0 * np.cos(np.pi * modes / (m + 1)))).reshape(shape)
    return lam


def _grounded(g: WeightedGraph):
    solver = _factor_cache.get(g)
    if solver is None:
        if g.zero_mean_mode:
            keep = np.arange(1, g.n_vertices)
            solver = _Solver(g.laplacian[keep][:, keep])
        elif is_uniform_box(g):
            solver = _SineSolver(g)
        else:
            solver = _Solver(g.reduced_laplacian)
        _factor_cache[g] = solver
    return solver


def solve_form(g: WeightedGraph, rhs: np.ndarray) -> np.ndarray:
    """Apply the Green's operator to ``rhs``.

    Pinned graphs: ``rhs`` and the result are interior vectors (or
    ``(n_interior, k)`` blocks).  Zero-mean graphs: full-length vectors, the
    right-hand side is projected to mean zero and the result is mean zero.
    """
    rhs = np.asarray(rhs, dtype=float)
    solver = _grounded(g)
    if not g.zero_mean_mode:
        return solver(rhs)
    b = rhs - rhs.mean(axis=0)
    u = np.zeros_like(b)
    u[1:] = solver(b[1:])
    return u - u.mean(axis=0)


def green_column(g: WeightedGraph, x: int) -> np.ndarray:
    """``G(., x)`` as a full-length vector (zero on the boundary)."""
    out = np.zeros(g.n_vertices)
    if g.zero_mean_mode:
        e = np.zeros(g.n_vertices)
        e[x] = 1.0
        return solve_form(g, e)
    i = g.interior_index[x]
    if i < 0:
        return out
    e = np.zeros(len(g.interior))
    e[i] = 1.0
    out[g.interior] = solve_form(g, e)
    return out


def quadratic_green(g: WeightedGraph, rho) -> np.ndarray | float:
    """``rho^T G rho`` for full-length weight vectors (rows of ``rho``)."""
    rho = np.atleast_2d(values_of(rho, g.n_vertices))
    if g.zero_mean_mode:
        u = solve_form(g, rho.T).T
        out = np.einsum("ij,ij->i", rho, u)
    else:
        r = rho[:, g.interior]
        u = solve_form(g, r.T).T
        out = np.einsum("ij,ij->i", r, u)
    return float(out[0]) if out.shape == (1,) else out


# ---------------------------------------------------------------- Dirichlet problems


def dirichlet_solve(g: WeightedGraph, free, values) -> np.ndarray:
    """Replace ``values`` on ``free`` by their discrete-harmonic extension.

    Every other vertex keeps its given value.  Broadcasts over leading axes
    of ``values``.
    """
    free = np.asarray(free, dtype=np.int64)
    vals = np.array(values_of(values, g.n_vertices), dtype=float)
    if len(free) == 0:
        return vals
    mask = np.zeros(g.n_vertices, dtype=bool)
    mask[free] = True
    fixed = np.flatnonzero(~mask)
    if len(fixed) == 0:
        raise InvalidInputError("no fixed vertices: the Dirichlet problem is singular")
    lap = g.laplacian
    a = lap[free][:, free]
    coupling = lap[free][:, fixed]
    flat = vals.reshape(-1, g.n_vertices)
    rhs = -(coupling @ flat[:, fixed].T)
    if not g.zero_mean_mode and np.array_equal(free, g.interior):
        sol = _grounded(g)(rhs)
    else:
        sol = _Solver(a)(rhs)
    flat = flat.copy()
    flat[:, free] = np.asarray(sol).reshape(len(free), -1).T
    return flat.reshape(vals.shape)


def _boundary_vector(g: WeightedGraph, boundary_values) -> np.ndarray:
    vals = np.asarray(getattr(boundary_values, "values", boundary_values), dtype=float)
    full = np.zeros(vals.shape[:-1] + (g.n_vertices,))
    if vals.shape[-1] == g.n_vertices:
        full[..., g.boundary] = vals[..., g.boundary]
    elif vals.shape[-1] == len(g.boundary):
        full[..., g.boundary] = vals
    else:
        raise InvalidInputError("boundary values must cover every vertex or exactly the boundary")
    return full


def harmonic_extension(g: WeightedGraph, boundary_values) -> FieldFunction:
    """Discrete-harmonic function with the given boundary values.

    At every interior vertex the result equals the weighted average of its
    neighbors, i.e. the expected boundary value at the walk's first hit.
    """
    if len(g.boundary) == 0:
        raise InvalidInputError("harmonic extension needs a non-empty boundary")
    full = _boundary_vector(g, boundary_values)
    return FieldFunction(g, dirichlet_solve(g, g.interior, full))


def one_point_conditional(g: WeightedGraph, y: int) -> tuple[dict[int, float], float]:
    """Neighbor weights of the conditional mean at ``y`` and the conditional variance.

    Given all other values, ``phi(y)`` is Gaussian with mean
    ``sum_x c_x phi(x)`` (``c_x = w(x, y) / sum w``) and variance ``1 / sum w``.
    """
    if g.is_boundary[y]:
        raise InvalidInputError(f"vertex {y} is on the boundary")
    nbrs, w = g.neighbors(y)
    total = w.sum()
    if len(nbrs) == 0 or total == 0:
        raise InvalidInputError(f"vertex {y} is isolated")
    if total < 0:
        raise NumericalError(f"incident weight at {y} is negative; no conditional variance")
    return {int(x): float(wx / total) for x, wx in zip(nbrs, w)}, 1.0 / float(total)


# ---------------------------------------------------------------- random walks


def _walk_batch(g, x, y, n, rng, indptr, targets, cum, rates, absorbing):
    pos = np.full(n, x, dtype=np.int64)
    occupation = np.zeros(n)
    alive = np.arange(n)
    while alive.size:
        v = pos[alive]
        at_y = v == y
        if at_y.any():
            occupation[alive[at_y]] += rng.exponential(1.0 / rates[v[at_y]])
        # next neighbor chosen with probability w / sum w via the global cumulative weights
        lo = cum[indptr[v]]
        target = lo + rng.random(v.size) * rates[v]
        k = np.searchsorted(cum, target, side="right") - 1
        k = np.clip(k, indptr[v], indptr[v + 1] - 1)
        nxt = targets[k]
        pos[alive] = nxt
        alive = alive[~absorbing[nxt]]
    return occupation


def greens_by_walk(
    g: WeightedGraph, x: int, y: int, n_walks: int, seed: int, chunk: int = 50_000
) -> tuple[float, float]:
    """Monte Carlo estimate of ``G(x, y)`` from walk occupation times.

    The walk waits an exponential time of rate ``sum_{e ∋ v} w(e)`` at ``v``
    and then crosses an incident edge with probability ``w(e) / sum w``.
    Returns ``(mean time spent at y before absorption, standard error)``.
    """
    if np.any(g.weights <= 0):
        raise UnsupportedGraphError("walk estimator needs strictly positive weights")
    if g.zero_mean_mode:
        raise UnsupportedGraphError("walk estimator needs an absorbing boundary")
    if n_walks < 2:
        raise InvalidInputError("need at least two walks for a standard error")
    if g.is_boundary[x]:
        return 0.0, 0.0
    if g.is_boundary[y]:
        return 0.0, 0.0
    adj = g.adjacency
    indptr = adj.indptr.astype(np.int64)
    cum = np.concatenate([[0.0], np.cumsum(adj.data)])
    rates = np.asarray(g.incident_weight)
    rng = make_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_walks:
        m = min(chunk, n_walks - done)
        occ = _walk_batch(g, x, y, m, rng, indptr, adj.indices, cum, rates, g.is_boundary)
        total += occ.sum()
        total_sq += np.dot(occ, occ)
        done += m
    mean = total / n_walks
    var = (total_sq - n_walks * mean**2) / (n_walks - 1)
    return float(mean), float(np.sqrt(max(var, 0.0) / n_walks))


def hitting_probabilities_by_walk(g: WeightedGraph, start: int, n_walks: int, seed: int) -> np.ndarray:
    """Empirical distribution of the first boundary vertex hit from ``start``."""
    if np.any(g.weights <= 0):
        raise UnsupportedGraphError("walk simulation needs strictly positive weights")
    adj = g.adjacency
    indptr = adj.indptr.astype(np.int64)
    cum = np.concatenate([[0.0], np.cumsum(adj.data)])
    rates = np.asarray(g.incident_weight)
    rng = make_rng(seed)
    pos = np.full(n_walks, start, dtype=np.int64)
    alive = np.flatnonzero(~g.is_boundary[pos])
    while alive.size:
        v = pos[alive]
        target = cum[indptr[v]] + rng.random(v.size) * rates[v]
        k = np.clip(np.searchsorted(cum, target, side="right") - 1, indptr[v], indptr[v + 1] - 1)
        pos[alive] = adj.indices[k]
        alive = alive[~g.is_boundary[pos[alive]]]
    return np.bincount(pos, minlength=g.n_vertices) / n_walks
