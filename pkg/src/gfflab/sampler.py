"""Exact samplers for discrete Gaussian free fields and their relatives.

All samplers are pure functions of their inputs and a 64-bit seed.  Passing
``n_samples`` returns a batch: ``FieldSample.values`` then has shape
``(n_samples, n_vertices)``.

Factorization used by :func:`sample_dgff_direct` and :func:`sample_massive`,
chosen from the graph alone so a given graph always takes the same path:

* box lattices with uniform weights: sine-transform diagonalization (DST-I);
* up to 4000 free vertices: dense Cholesky of the precision matrix
  (dense eigendecomposition for the zero-mean massless case);
* larger graphs with positive weights: ``Q^{-1} (B^T W^{1/2} z + m z')``,
  one sparse solve per sample, where ``L = B^T W B``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import InvalidInputError, NumericalError, UnsupportedGraphError
from .green import _Solver, box_eigenvalues, dirichlet_solve, harmonic_extension
from .lattice import SubGraph, WeightedGraph, build_torus_grid, induced_subgraph, is_uniform_box, values_of
from .rng import make_rng

METHODS = ("direct", "fft", "fft-conditioned", "eigenbasis", "massive", "ou")
DENSE_SAMPLER_CAP = 4000
# Uncalibrated FFT output has covariance KAPPA**2 times the torus pseudoinverse.
TORUS_FFT_KAPPA = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class FieldSample:
    """One field realization (or a batch along the leading axis)."""

    graph: WeightedGraph
    values: np.ndarray
    seed: int
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method tag {self.method!r}")
        values = np.asarray(self.values, dtype=float)
        if values.shape[-1] != self.graph.n_vertices:
            raise InvalidInputError("values do not match the graph")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def is_batch(self) -> bool:
        return self.values.ndim == 2

    def __len__(self) -> int:
        return len(self.values) if self.is_batch else 1

    def __getitem__(self, i) -> "FieldSample":
        if not self.is_batch:
            raise TypeError("single sample is not indexable")
        return FieldSample(self.graph, self.values[i], self.seed, self.method, dict(self.params))

    def grid(self) -> np.ndarray:
        """Values reshaped to the lattice grid (requires ``graph.grid_shape``)."""
        if self.graph.grid_shape is None:
            raise InvalidInputError("graph has no grid layout")
        return self.values.reshape(self.values.shape[:-1] + self.graph.grid_shape)


# ---------------------------------------------------------------- factorizations


def _dst_fluctuation(g: WeightedGraph, mass2: float, rng: np.random.Generator, k: int) -> np.ndarray:
    inner = tuple(s - 2 for s in g.grid_shape)
    lam = box_eigenvalues(g)
    z = rng.standard_normal((k,) + inner)
    # the orthonormal DST-I is symmetric and orthogonal, so S diag(lam^-1/2) z has covariance L^-1
    phi = sfft.dstn(z / np.sqrt(lam + mass2), type=1, norm="ortho", axes=tuple(range(1, len(inner) + 1)))
    out = np.zeros((k,) + g.grid_shape)
    out[(slice(None),) + tuple(slice(1, s - 1) for s in g.grid_shape)] = phi
    return out.reshape(k, g.n_vertices)


def _dense_fluctuation(g, mass2, rng, k):
    free = np.arange(g.n_vertices) if g.zero_mean_mode else g.interior
    out = np.zeros((k, g.n_vertices))
    if len(free) == 0:
        return out
    if g.zero_mean_mode and mass2 == 0:
        lam, vec = np.linalg.eigh(g.laplacian.toarray())
        keep = np.ones(len(lam), dtype=bool)
        keep[np.argmin(np.abs(lam))] = False
        z = rng.standard_normal((k, len(free) - 1))
        out[:] = (z / np.sqrt(lam[keep])) @ vec[:, keep].T
        return out
    lap = g.laplacian.toarray() if g.zero_mean_mode else g.reduced_laplacian.toarray()
    q = lap + mass2 * np.eye(len(free))
    try:
        chol = sla.cholesky(q, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"precision matrix is not positive definite (condition {np.linalg.cond(q):.3e})") from exc
    z = rng.standard_normal((k, len(free)))
    # chol^{-T} z has covariance (chol chol^T)^{-1} = Q^{-1}
    out[:, free] = sla.solve_triangular(chol, z.T, lower=True, trans="T").T
    return out


def _incidence_fluctuation(g, mass2, rng, k):
    if np.any(g.weights <= 0):
        raise UnsupportedGraphError(
            f"graphs with more than {DENSE_SAMPLER_CAP} free vertices need positive weights for exact sampling"
        )
    out = np.zeros((k, g.n_vertices))
    if g.zero_mean_mode and mass2 == 0:
        keep = np.arange(1, g.n_vertices)
        solver = _Solver(g.laplacian[keep][:, keep])
        b = g.incidence[:, keep]
    else:
        keep = np.arange(g.n_vertices) if g.zero_mean_mode else g.interior
        q = g.laplacian[keep][:, keep] + mass2 * sp.eye(len(keep))
        solver = _Solver(q)
        b = g.incidence[:, keep]
    bt = (sp.diags(np.sqrt(g.weights)) @ b).T.tocsr()
    for i in range(k):
        rhs = bt @ rng.standard_normal(g.n_edges)
        if mass2 > 0:
            rhs = rhs + np.sqrt(mass2) * rng.standard_normal(len(keep))
        out[i, keep] = solver(rhs)
    return out


def _fluctuation(g: WeightedGraph, mass2: float, rng: np.random.Generator, k: int) -> np.ndarray:
    if is_uniform_box(g):
        out = _dst_fluctuation(g, mass2, rng, k)
    elif (g.n_vertices if g.zero_mean_mode else len(g.interior)) <= DENSE_SAMPLER_CAP:
        out = _dense_fluctuation(g, mass2, rng, k)
    else:
        out = _incidence_fluctuation(g, mass2, rng, k)
    if g.zero_mean_mode and mass2 == 0:
        out -= out.mean(axis=1, keepdims=True)
    return out


def _finish(values: np.ndarray, n_samples):
    return values[0] if n_samples is None else values


def _count(n_samples) -> int:
    if n_samples is None:
        return 1
    if n_samples < 1:
        raise InvalidInputError("n_samples must be positive")
    return int(n_samples)


# ---------------------------------------------------------------- public samplers


def sample_dgff_direct(g: WeightedGraph, seed: int, boundary_values=None, n_samples: int | None = None) -> FieldSample:
    """Exact DGFF sample: harmonic extension of the boundary data plus ``L_red^{-1/2} z``.

    On zero-mean graphs the sample has covariance equal to the Laplacian
    pseudoinverse and mean exactly zero.
    """
    return _sample_precision(g, 0.0, seed, boundary_values, n_samples, "direct")


def sample_massive(g: WeightedGraph, mass2: float, seed: int, n_samples: int | None = None) -> FieldSample:
    """Massive field with covariance ``(L_red + mass2 * I)^{-1}``.

    Uses the same pipeline and random stream as :func:`sample_dgff_direct`,
    so ``mass2 == 0`` reproduces it value for value.  On zero-mean graphs a
    positive mass removes the mean constraint.
    """
    if mass2 < 0:
        raise InvalidInputError("mass2 must be non-negative")
    return _sample_precision(g, float(mass2), seed, None, n_samples, "massive")


def _sample_precision(g, mass2, seed, boundary_values, n_samples, method):
    k = _count(n_samples)
    rng = make_rng(seed)
    values = _fluctuation(g, mass2, rng, k)
    if boundary_values is not None:
        if g.zero_mean_mode:
            raise InvalidInputError("zero-mean graphs have no boundary values")
        values += harmonic_extension(g, boundary_values).values
    params = {"mass2": mass2} if method == "massive" else {}
    return FieldSample(g, _finish(values, n_samples), seed, method, params)


def greens_covariance(g: WeightedGraph, mass2: float = 0.0) -> np.ndarray:
    """Full ``n_vertices`` square covariance of :func:`sample_massive` (dense)."""
    if g.zero_mean_mode and mass2 == 0:
        from .green import greens_matrix

        return greens_matrix(g).full()
    free = np.arange(g.n_vertices) if g.zero_mean_mode else g.interior
    lap = g.laplacian.toarray()[np.ix_(free, free)]
    out = np.zeros((g.n_vertices, g.n_vertices))
    out[np.ix_(free, free)] = np.linalg.inv(lap + mass2 * np.eye(len(free)))
    return 0.5 * (out + out.T)


# ---------------------------------------------------------------- torus FFT


def _torus_coefficients(m: int, n: int) -> np.ndarray:
    sj = np.sin(np.arange(m) * np.pi / m) ** 2
    sk = np.sin(np.arange(n) * np.pi / n) ** 2
    denom = sj[:, None] + sk[None, :]
    coef = np.zeros((m, n))
    coef[denom > 0] = 1.0 / np.sqrt(denom[denom > 0])
    return coef


def _torus_transform(m: int, n: int, gaussians: np.ndarray, calibrated: bool) -> np.ndarray:
    coef = _torus_coefficients(m, n)
    h = np.real(sfft.ifft2(coef * gaussians, norm="ortho"))
    if calibrated:
        h = h / TORUS_FFT_KAPPA
    h = h.reshape(h.shape[:-2] + (m * n,))
    return h - h.mean(axis=-1, keepdims=True)


def sample_torus_fft(m: int, n: int, seed: int, calibrated: bool = False, n_samples: int | None = None) -> FieldSample:
    """Spectral sampler on the ``m x n`` torus.

    Complex Gaussians with independent ``N(0, 1/2)`` parts are multiplied by
    ``1 / sqrt(sin^2(pi j/m) + sin^2(pi k/n))`` (zero for the constant mode),
    transformed with the unitary inverse DFT, and the real part is kept.
    That reproduces the classic recipe, whose output covariance is
    ``TORUS_FFT_KAPPA**2`` times the unit-weight torus pseudoinverse;
    ``calibrated=True`` divides by ``TORUS_FFT_KAPPA`` to give the DGFF law.
    """
    k = _count(n_samples)
    g = build_torus_grid(m, n)
    rng = make_rng(seed)
    z = (rng.standard_normal((k, m, n)) + 1j * rng.standard_normal((k, m, n))) / np.sqrt(2.0)
    values = _torus_transform(m, n, z, calibrated)
    return FieldSample(g, _finish(values, n_samples), seed, "fft", {"calibrated": bool(calibrated), "m": m, "n": n})


def torus_fft_covariance(m: int, n: int, calibrated: bool = False) -> np.ndarray:
    """Exact covariance of :func:`sample_torus_fft` from its linear map."""
    size = m * n
    basis = np.eye(size).reshape(size, m, n) / np.sqrt(2.0)
    real_part = _torus_transform(m, n, basis, calibrated)
    imag_part = _torus_transform(m, n, 1j * basis, calibrated)
    return real_part.T @ real_part + imag_part.T @ imag_part


def _check_induced(sub: SubGraph) -> None:
    ref = induced_subgraph(sub.parent, sub.parent_ids, boundary=sub.parent_ids[sub.graph.boundary]).graph
    mine = {tuple(sorted(e)): w for e, w in zip(sub.graph.edges.tolist(), sub.graph.weights.tolist())}
    theirs = {tuple(sorted(e)): w for e, w in zip(ref.edges.tolist(), ref.weights.tolist())}
    if mine != theirs:
        raise InvalidInputError("subgraph is not the induced subgraph of its parent")


def impose_boundary(torus_field: FieldSample, sub: SubGraph, boundary_values) -> FieldSample:
    """Condition a torus field on boundary values of an induced subgraph.

    Returns ``h + h~`` on ``sub``, where ``h~`` is the discrete-harmonic
    interpolation of ``boundary_values - h`` from ``sub``'s boundary.
    """
    if not isinstance(sub, SubGraph):
        raise InvalidInputError("sub must be a SubGraph (see lattice.induced_subgraph)")
    if sub.parent is not torus_field.graph:
        if sub.parent.n_vertices != torus_field.graph.n_vertices:
            raise InvalidInputError("subgraph does not live in this field's graph")
    _check_induced(sub)
    g = sub.graph
    if len(g.boundary) == 0:
        raise InvalidInputError("subgraph needs a non-empty boundary")
    h = sub.restrict(torus_field.values)
    bv = np.asarray(getattr(boundary_values, "values", boundary_values), dtype=float)
    target = np.zeros(g.n_vertices)
    if bv.shape[-1] == g.n_vertices:
        target[g.boundary] = bv[..., g.boundary]
    elif bv.shape[-1] == len(g.boundary):
        target[g.boundary] = bv
    else:
        raise InvalidInputError("boundary values must cover the subgraph or exactly its boundary")
    diff = np.zeros_like(h)
    diff[..., g.boundary] = target[g.boundary] - h[..., g.boundary]
    correction = dirichlet_solve(g, g.interior, diff)
    out = h + correction
    out[..., g.boundary] = target[g.boundary]
    return FieldSample(g, out, torus_field.seed, "fft-conditioned", dict(torus_field.params))


def ou_evolve(start: FieldSample, t: float, seed: int) -> FieldSample:
    """Exact Ornstein-Uhlenbeck step that leaves the DGFF law invariant.

    Every Laplacian eigenmode coefficient ``c`` moves to
    ``exp(-t) c + sqrt(1 - exp(-2t)) * stationary noise``.  All modes share
    the unit rate, so the step is ``exp(-t) phi + sqrt(1 - exp(-2t)) xi``
    with ``xi`` an independent DGFF draw.
    """
    if t < 0:
        raise InvalidInputError("t must be non-negative")
    g = start.graph
    if not g.zero_mean_mode and np.any(start.values[..., g.boundary] != 0):
        raise InvalidInputError("OU dynamics needs zero boundary values")
    if t == 0:
        return FieldSample(g, np.array(start.values), seed, "ou", {"t": 0.0})
    noise = sample_dgff_direct(g, seed, n_samples=len(start) if start.is_batch else None).values
    decay = np.exp(-t)
    values = decay * start.values + np.sqrt(-np.expm1(-2.0 * t)) * noise
    return FieldSample(g, values, seed, "ou", {"t": float(t)})


# ---------------------------------------------------------------- continuum eigenbasis


def _gauss_legendre_unit(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Dirichlet eigenbasis of the unit square, ``e_jk = 2 sin(pi j x) sin(pi k y)``.

    Modes with ``1 <= j, k <= N`` are ordered by non-increasing eigenvalue
    ``-pi^2 (j^2 + k^2)``, ties broken lexicographically in ``(j, k)``.
    """

    N: int
    quad_order: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise InvalidInputError("mode cutoff must be >= 1")
        if self.quad_order == 0:
            object.__setattr__(self, "quad_order", max(64, 2 * self.N + 32))

    @cached_property
    def modes(self) -> np.ndarray:
        j, k = np.meshgrid(np.arange(1, self.N + 1), np.arange(1, self.N + 1), indexing="ij")
        j, k = j.ravel(), k.ravel()
        order = np.lexsort((k, j, j**2 + k**2))
        return np.stack([j[order], k[order]], axis=1)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return -np.pi**2 * np.sum(self.modes**2, axis=1).astype(float)

    def __len__(self) -> int:
        return len(self.modes)

    def evaluate(self, x, y) -> np.ndarray:
        """``(n_modes,) + shape`` array of basis values at the points."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        j = self.modes[:, 0].reshape((-1,) + (1,) * x.ndim)
        k = self.modes[:, 1].reshape((-1,) + (1,) * x.ndim)
        return 2.0 * np.sin(np.pi * j * x) * np.sin(np.pi * k * y)

    def inner(self, rho) -> np.ndarray:
        """``(e_jk, rho)`` for every mode by tensor Gauss-Legendre quadrature."""
        x, w = _gauss_legendre_unit(self.quad_order)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        vals = np.asarray(rho(xx, yy), dtype=float) * np.outer(w, w)
        sx = np.sqrt(2.0) * np.sin(np.pi * np.outer(np.arange(1, self.N + 1), x))
        table = sx @ vals @ sx.T  # [j-1, k-1] -> (e_jk, rho)
        return table[self.modes[:, 0] - 1, self.modes[:, 1] - 1]

    def orthonormality_error(self) -> float:
        """Max deviation of the quadrature Gram matrix from the identity."""
        x, w = _gauss_legendre_unit(self.quad_order)
        sx = np.sqrt(2.0) * np.sin(np.pi * np.outer(np.arange(1, self.N + 1), x))
        gram1 = (sx * w) @ sx.T
        # the 2D Gram matrix is the Kronecker square of the 1D one
        gram2 = np.kron(gram1, gram1)
        return float(np.abs(gram2 - np.eye(len(gram2))).max())

    def pair_variance(self, rho, n_modes: int | None = None) -> float:
        """Exact variance of the truncated pairing ``sum alpha (e, rho) / sqrt(-lambda)``."""
        c = self.inner(rho)[:n_modes]
        return float(np.sum(c**2 / -self.eigenvalues[: len(c)]))

    def point_variance(self, x: float, y: float) -> np.ndarray:
        """Variance of the pointwise partial sums after 1, 2, ... modes."""
        e = self.evaluate(x, y)
        return np.cumsum(e**2 / -self.eigenvalues)


@dataclass(frozen=True, eq=False)
class EigenbasisField:
    """Random partial sum ``sum alpha_jk (-lambda_jk)^{-1/2} e_jk``."""

    basis: SpectralBasis
    coefficients: np.ndarray
    seed: int
    method: str = "eigenbasis"

    def _scaled(self, n_modes):
        a = self.coefficients[..., :n_modes]
        return a / np.sqrt(-self.basis.eigenvalues[: a.shape[-1]])

    def evaluate(self, x, y, n_modes: int | None = None) -> np.ndarray:
        e = self.basis.evaluate(x, y)
        s = self._scaled(n_modes)
        return np.tensordot(s, e[: s.shape[-1]], axes=(-1, 0))

    def pair(self, rho, n_modes: int | None = None) -> np.ndarray | float:
        s = self._scaled(n_modes)
        out = s @ self.basis.inner(rho)[: s.shape[-1]]
        return float(out) if np.ndim(out) == 0 else out


def sample_square_eigenbasis(N: int, seed: int, n_samples: int | None = None) -> EigenbasisField:
    """I.i.d. standard normal coefficients for the first ``N x N`` modes."""
    basis = SpectralBasis(N)
    rng = make_rng(seed)
    shape = (len(basis),) if n_samples is None else (_count(n_samples), len(basis))
    return EigenbasisField(basis, rng.standard_normal(shape), seed)


def hilbert_schmidt_sum(a: float, b: float, d: int, J: int) -> tuple[float, bool]:
    """Partial sum ``sum_{j<=J} j^{2(2a-2b)/d}`` and whether the full series converges.

    The series converges exactly when the exponent is below -1, i.e. when
    ``a < b - d/4``.
    """
    if J < 1 or d < 1:
        raise InvalidInputError("need J >= 1 and d >= 1")
    p = 2.0 * (2.0 * a - 2.0 * b) / d
    j = np.arange(1, J + 1, dtype=float)
    return float(np.sum(j**p)), bool(p < -1)
