"""Weighted graphs, box/torus lattices, triangulations and Dirichlet energies.

A :class:`WeightedGraph` is the arena for every discrete field in the
package.  Vertex ids are dense integers ``0..n-1``; the boundary is kept as a
sorted id array.  Fields are plain float arrays indexed by vertex id (or a
:class:`FieldFunction` wrapping one).

The Dirichlet form of a graph is

    (f, g)_grad = sum_e w(e) (f(v) - f(u)) (g(v) - g(u)),

which equals ``f @ L @ g`` for the full weighted graph Laplacian ``L``.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .errors import InvalidInputError, InvalidLatticeError, NumericalError, ResourceError

DEFAULT_MAX_VERTICES = 10**7
PD_RELATIVE_TOL = 1e-10
# above this size the signed-weight definiteness check switches to an iterative eigensolver
_DENSE_EIG_LIMIT = 3000


def max_vertices() -> int:
    """Vertex-count cap, overridable through ``GFFLAB_MAX_VERTICES``."""
    raw = os.environ.get("GFFLAB_MAX_VERTICES")
    if raw is None:
        return DEFAULT_MAX_VERTICES
    try:
        return int(raw)
    except ValueError as exc:
        raise InvalidInputError(f"GFFLAB_MAX_VERTICES must be an integer, got {raw!r}") from exc


def _check_size(n_vertices: int, cap: int | None) -> None:
    cap = max_vertices() if cap is None else cap
    if n_vertices > cap:
        raise ResourceError(f"{n_vertices} vertices exceeds the cap of {cap}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Finite graph with real edge weights and a pinned boundary.

    Parameters
    ----------
    n_vertices : int
    edges : (m, 2) int array
        Unordered vertex pairs; no self-loops, no repeated pairs.
    weights : (m,) float array
        Edge weights.  Negative weights are allowed as long as the reduced
        Dirichlet form stays positive definite.
    boundary : int array
        Pinned vertices.  May be empty only when ``zero_mean_mode`` is set.
    positions : (n, d) float array, optional
    zero_mean_mode : bool
        Fields live on mean-zero functions instead of being pinned.
    grid_shape : tuple of int, optional
        Set by the lattice builders when vertex ids are the C-order ravel of a
        rectangular grid; enables FFT/DST fast paths.
    check_definite : bool
        Verify positive definiteness at construction (skip for huge graphs).
    """

    n_vertices: int
    edges: np.ndarray
    weights: np.ndarray
    boundary: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    positions: np.ndarray | None = None
    zero_mean_mode: bool = False
    grid_shape: tuple[int, ...] | None = None
    check_definite: bool = field(default=True, repr=False)

    def __post_init__(self):
        n = int(self.n_vertices)
        if n < 1:
            raise InvalidLatticeError("graph needs at least one vertex")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(weights) != len(edges):
            raise InvalidLatticeError("one weight per edge required")
        if not np.all(np.isfinite(weights)):
            raise InvalidLatticeError("edge weights must be finite")
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise InvalidLatticeError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise InvalidLatticeError("self-loops are not allowed")
        key = np.sort(edges, axis=1)
        if len(np.unique(key, axis=0)) != len(key):
            raise InvalidLatticeError("at most one edge per unordered vertex pair")
        boundary = np.unique(np.asarray(self.boundary, dtype=np.int64).reshape(-1))
        if boundary.size and (boundary[0] < 0 or boundary[-1] >= n):
            raise InvalidLatticeError("boundary vertex out of range")
        if boundary.size == 0 and not self.zero_mean_mode:
            raise InvalidLatticeError("empty boundary requires zero_mean_mode")
        positions = self.positions
        if positions is not None:
            positions = np.asarray(positions, dtype=float)
            if positions.ndim == 1:
                positions = positions[:, None]
            if len(positions) != n:
                raise InvalidLatticeError("one position per vertex required")
            positions = _frozen(positions)
        if self.grid_shape is not None and int(np.prod(self.grid_shape)) != n:
            raise InvalidLatticeError("grid_shape does not match the vertex count")

        object.__setattr__(self, "n_vertices", n)
        object.__setattr__(self, "edges", _frozen(edges))
        object.__setattr__(self, "weights", _frozen(weights))
        object.__setattr__(self, "boundary", _frozen(boundary))
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "zero_mean_mode", bool(self.zero_mean_mode))
        if self.grid_shape is not None:
            object.__setattr__(self, "grid_shape", tuple(int(s) for s in self.grid_shape))

        if self.check_definite and not is_positive_definite(self):
            raise NumericalError(
                "Dirichlet form is not positive definite on "
                + ("mean-zero functions" if self.zero_mean_mode else "functions vanishing on the boundary")
            )

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def interior(self) -> np.ndarray:
        """Sorted ids of non-boundary vertices."""
        return _frozen(np.flatnonzero(~self.is_boundary))

    @cached_property
    def interior_index(self) -> np.ndarray:
        """Map vertex id -> position in :attr:`interior` (-1 on the boundary)."""
        idx = np.full(self.n_vertices, -1, dtype=np.int64)
        idx[self.interior] = np.arange(len(self.interior))
        return _frozen(idx)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric weighted adjacency matrix."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        w = self.weights
        a = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(self.n_vertices, self.n_vertices),
        ).tocsr()
        a.sort_indices()
        return a

    @cached_property
    def incident_weight(self) -> np.ndarray:
        """Sum of weights of edges incident to each vertex."""
        return _frozen(np.asarray(self.adjacency.sum(axis=1)).ravel())

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Full Laplacian ``D - A``; ``f @ L @ g`` is the Dirichlet form."""
        return (sp.diags(self.incident_weight) - self.adjacency).tocsr()

    @cached_property
    def reduced_laplacian(self) -> sp.csr_matrix:
        """Laplacian restricted to interior rows and columns."""
        idx = self.interior
        return self.laplacian[idx][:, idx].tocsc()

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Signed edge-vertex incidence matrix ``B`` with ``L = B.T @ diag(w) @ B``."""
        m = self.n_edges
        rows = np.repeat(np.arange(m), 2)
        cols = self.edges.ravel()
        vals = np.tile([-1.0, 1.0], m)
        return sp.csr_matrix((vals, (rows, cols)), shape=(m, self.n_vertices))

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor ids of ``v`` and the corresponding edge weights."""
        a = self.adjacency
        lo, hi = a.indptr[v], a.indptr[v + 1]
        return a.indices[lo:hi].copy(), a.data[lo:hi].copy()

    def field(self, values) -> "FieldFunction":
        return FieldFunction(self, values)


@dataclass(frozen=True, eq=False)
class FieldFunction:
    """Real values on every vertex of a graph, boundary included."""

    graph: WeightedGraph
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[-1:] != (self.graph.n_vertices,):
            raise InvalidInputError(
                f"field has trailing length {values.shape[-1:]} but the graph has {self.graph.n_vertices} vertices"
            )
        object.__setattr__(self, "values", values)


def values_of(f, n_vertices: int | None = None) -> np.ndarray:
    """Return the float array behind a field-like object, checking its length."""
    values = np.asarray(getattr(f, "values", f), dtype=float)
    if n_vertices is not None and (values.ndim == 0 or values.shape[-1] != n_vertices):
        raise InvalidInputError(f"expected {n_vertices} values per field, got shape {values.shape}")
    return values


# ---------------------------------------------------------------- definiteness


def _mean_zero_projected(lap: np.ndarray) -> np.ndarray:
    n = lap.shape[0]
    return lap + np.ones((n, n)) / n


def reduced_form_eigenvalues(g: WeightedGraph) -> np.ndarray:
    """Dense eigenvalues of the form the field lives on (small graphs only).

    Interior-restricted Laplacian for pinned graphs; for ``zero_mean_mode``
    graphs the Laplacian on the mean-zero subspace (the constant mode removed).
    """
    if g.zero_mean_mode:
        lap = g.laplacian.toarray()
        eig = np.linalg.eigvalsh(lap)
        # constants span the kernel of L; drop the eigenvalue closest to zero
        drop = int(np.argmin(np.abs(eig)))
        return np.delete(eig, drop)
    return np.linalg.eigvalsh(g.reduced_laplacian.toarray())


def _components_all_anchored(g: WeightedGraph) -> bool:
    n_comp, labels = csgraph.connected_components(g.adjacency, directed=False)
    if g.zero_mean_mode:
        return n_comp == 1
    anchored = np.zeros(n_comp, dtype=bool)
    anchored[labels[g.boundary]] = True
    return bool(anchored.all())


def is_positive_definite(g: WeightedGraph, rtol: float = PD_RELATIVE_TOL) -> bool:
    """Whether the reduced Dirichlet form is strictly positive definite.

    With strictly positive weights this is equivalent to every connected
    component touching the boundary (or the graph being connected in
    zero-mean mode), which is checked exactly.  Signed weights fall back to an
    eigenvalue test: smallest eigenvalue > ``rtol`` times the largest.
    """
    if g.zero_mean_mode and g.n_vertices == 1:
        return False
    if not g.zero_mean_mode and len(g.interior) == 0:
        return True
    if np.all(g.weights > 0):
        return _components_all_anchored(g)
    size = g.n_vertices if g.zero_mean_mode else len(g.interior)
    if size <= _DENSE_EIG_LIMIT:
        eig = reduced_form_eigenvalues(g)
        return bool(eig[0] > rtol * max(eig[-1], 0.0) and eig[-1] > 0)
    if g.zero_mean_mode:
        n = g.n_vertices
        ones = np.ones(n) / np.sqrt(n)
        lam_max = spla.eigsh(g.laplacian, k=1, which="LA", return_eigenvectors=False)[0]
        # lift the constant mode to lam_max so the smallest eigenvalue lives on mean-zero functions
        shifted = spla.LinearOperator(
            (n, n), matvec=lambda x: g.laplacian @ x + lam_max * ones * (ones @ x)
        )
        lam_min = spla.eigsh(shifted, k=1, which="SA", return_eigenvectors=False)[0]
    else:
        red = g.reduced_laplacian
        lam_max = spla.eigsh(red, k=1, which="LA", return_eigenvectors=False)[0]
        lam_min = spla.eigsh(red, k=1, which="SA", return_eigenvectors=False)[0]
    return bool(lam_min > rtol * lam_max and lam_max > 0)


def is_uniform_box(g: WeightedGraph) -> bool:
    """Whether ``g`` is a box lattice with one positive weight and its frame pinned.

    Such graphs are diagonalized by the type-I sine transform.
    """
    shape = g.grid_shape
    if shape is None or g.zero_mean_mode or min(shape) < 3 or len(g.weights) == 0:
        return False
    if not np.all(g.weights == g.weights[0]) or g.weights[0] <= 0:
        return False
    total = int(np.prod(shape))
    if g.n_edges != sum((s - 1) * total // s for s in shape):
        return False
    coords = np.stack(np.unravel_index(np.arange(g.n_vertices), shape), axis=1)
    frame = np.any((coords == 0) | (coords == np.array(shape) - 1), axis=1)
    if not np.array_equal(frame, g.is_boundary):
        return False
    # every edge must join grid neighbours
    diff = np.abs(coords[g.edges[:, 0]] - coords[g.edges[:, 1]]).sum(axis=1)
    return bool(np.all(diff == 1))


# ---------------------------------------------------------------- builders


def _grid_graph(side: int, d: int, weight: float, offset: int, max_vertices) -> WeightedGraph:
    shape = (side,) * d
    total = side**d
    _check_size(total, max_vertices)
    ids = np.arange(total).reshape(shape)
    edges = []
    for axis in range(d):
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[axis] = slice(0, side - 1)
        hi[axis] = slice(1, side)
        edges.append(np.stack([ids[tuple(lo)].ravel(), ids[tuple(hi)].ravel()], axis=1))
    edges = np.concatenate(edges)
    coords = np.stack(np.unravel_index(np.arange(total), shape), axis=1)
    boundary = np.flatnonzero(np.any((coords == 0) | (coords == side - 1), axis=1))
    return WeightedGraph(
        total,
        edges,
        np.full(len(edges), float(weight)),
        boundary,
        positions=(coords - offset).astype(float),
        grid_shape=shape,
        check_definite=weight <= 0,
    )


def build_box_lattice(d: int, n: int, weight: float = 1.0, max_vertices: int | None = None) -> WeightedGraph:
    """Nearest-neighbor graph on ``[-n, n]^d``, pinned where any ``|coord| == n``.

    Vertex ids are the C-order ravel of the ``(2n+1,)*d`` grid, so vertex
    ``i`` has coordinates ``np.unravel_index(i, (2n+1,)*d) - n``.
    """
    if d < 1 or n < 1:
        raise InvalidInputError("box lattice needs d >= 1 and n >= 1")
    return _grid_graph(2 * n + 1, d, weight, n, max_vertices)


def build_grid(side: int, d: int = 2, weight: float = 1.0, max_vertices: int | None = None) -> WeightedGraph:
    """``side^d`` grid with its outer layer pinned; coordinates run from 0.

    ``build_grid(5)`` is the 5x5 grid with a 3x3 free interior.  Odd sides
    give the same graph as :func:`build_box_lattice` up to the coordinate shift.
    """
    if d < 1 or side < 3:
        raise InvalidInputError("grid needs d >= 1 and side >= 3")
    return _grid_graph(side, d, weight, 0, max_vertices)


def build_torus_grid(m: int, n: int, weight: float = 1.0, max_vertices: int | None = None) -> WeightedGraph:
    """``m x n`` periodic grid; vertex ``(i, j)`` has id ``i * n + j``."""
    if m < 3 or n < 3:
        raise InvalidLatticeError("torus sides must be >= 3 (smaller sides create multi-edges)")
    _check_size(m * n, max_vertices)
    ids = np.arange(m * n).reshape(m, n)
    down = np.stack([ids.ravel(), np.roll(ids, -1, axis=0).ravel()], axis=1)
    right = np.stack([ids.ravel(), np.roll(ids, -1, axis=1).ravel()], axis=1)
    edges = np.concatenate([down, right])
    ii, jj = np.divmod(np.arange(m * n), n)
    return WeightedGraph(
        m * n,
        edges,
        np.full(len(edges), float(weight)),
        np.zeros(0, dtype=np.int64),
        positions=np.stack([ii, jj], axis=1).astype(float),
        zero_mean_mode=True,
        grid_shape=(m, n),
        check_definite=weight <= 0,
    )


def build_path(n_vertices: int, weight: float = 1.0, boundary="ends") -> WeightedGraph:
    """Path ``0 - 1 - ... - (n-1)``; boundary defaults to the two end vertices."""
    if n_vertices < 2:
        raise InvalidInputError("path needs at least two vertices")
    edges = np.stack([np.arange(n_vertices - 1), np.arange(1, n_vertices)], axis=1)
    if isinstance(boundary, str):
        if boundary != "ends":
            raise InvalidInputError(f"unknown boundary spec {boundary!r}")
        boundary = [0, n_vertices - 1]
    return WeightedGraph(
        n_vertices,
        edges,
        np.full(len(edges), float(weight)),
        boundary,
        positions=np.arange(n_vertices, dtype=float),
        grid_shape=(n_vertices,),
    )


def build_cycle(n_vertices: int, weight: float = 1.0) -> WeightedGraph:
    """Cycle graph in zero-mean mode (the discrete circle)."""
    if n_vertices < 3:
        raise InvalidLatticeError("cycle needs at least three vertices")
    a = np.arange(n_vertices)
    edges = np.stack([a, (a + 1) % n_vertices], axis=1)
    return WeightedGraph(
        n_vertices,
        edges,
        np.full(n_vertices, float(weight)),
        np.zeros(0, dtype=np.int64),
        positions=a / n_vertices,
        zero_mean_mode=True,
        grid_shape=(n_vertices,),
    )


def interval_mesh(x) -> WeightedGraph:
    """Path graph on sorted nodes ``x`` with weights ``1 / spacing``.

    Its Dirichlet energy is the continuum energy of the piecewise-linear
    interpolant, the one-dimensional counterpart of :func:`cotangent_weights`.
    """
    x = np.asarray(x, dtype=float)
    h = np.diff(x)
    if np.any(h <= 0):
        raise InvalidInputError("interval nodes must be strictly increasing")
    n = len(x)
    edges = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1)
    return WeightedGraph(n, edges, 1.0 / h, [0, n - 1], positions=x)


@dataclass(frozen=True, eq=False)
class SubGraph:
    """Induced subgraph together with the parent ids of its vertices."""

    graph: WeightedGraph
    parent: WeightedGraph
    parent_ids: np.ndarray

    def restrict(self, parent_values) -> np.ndarray:
        return values_of(parent_values, self.parent.n_vertices)[..., self.parent_ids]


def induced_subgraph(parent: WeightedGraph, vertex_ids, boundary=None) -> SubGraph:
    """Induced subgraph on ``vertex_ids`` (kept in the given order).

    ``boundary`` (parent ids) defaults to the vertices of the set that have a
    neighbor outside it, together with any parent boundary vertices.
    """
    ids = np.asarray(vertex_ids, dtype=np.int64)
    if len(np.unique(ids)) != len(ids):
        raise InvalidInputError("vertex ids must be distinct")
    local = np.full(parent.n_vertices, -1, dtype=np.int64)
    local[ids] = np.arange(len(ids))
    u, v = parent.edges[:, 0], parent.edges[:, 1]
    keep = (local[u] >= 0) & (local[v] >= 0)
    edges = np.stack([local[u[keep]], local[v[keep]]], axis=1)
    if boundary is None:
        cross = (local[u] >= 0) ^ (local[v] >= 0)
        touching = np.concatenate([u[cross], v[cross]])
        touching = touching[local[touching] >= 0]
        boundary = np.union1d(touching, np.intersect1d(parent.boundary, ids))
    boundary = np.asarray(boundary, dtype=np.int64)
    if np.any(local[boundary] < 0):
        raise InvalidInputError("boundary vertices must belong to the subgraph")
    positions = None if parent.positions is None else parent.positions[ids]
    g = WeightedGraph(len(ids), edges, parent.weights[keep], local[boundary], positions=positions)
    return SubGraph(g, parent, _frozen(ids))


# ---------------------------------------------------------------- energies


def dirichlet_inner(g: WeightedGraph, f1, f2) -> np.ndarray | float:
    """Bilinear Dirichlet form; broadcasts over leading batch axes."""
    a = values_of(f1, g.n_vertices)
    b = values_of(f2, g.n_vertices)
    u, v = g.edges[:, 0], g.edges[:, 1]
    da = a[..., v] - a[..., u]
    db = b[..., v] - b[..., u]
    out = np.sum(g.weights * da * db, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def dirichlet_energy(g: WeightedGraph, f) -> np.ndarray | float:
    """``sum_e w(e) (f(v) - f(u))**2``."""
    return dirichlet_inner(g, f, f)


# ---------------------------------------------------------------- triangulations


def _signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p0, p1, p2 = (vertices[triangles[:, i]] for i in range(3))
    e1, e2 = p1 - p0, p2 - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Planar triangle mesh.

    Triangles are stored counter-clockwise (reoriented at construction).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise InvalidLatticeError("vertices must be an (n, 2) array")
        tris = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise InvalidLatticeError("triangle references a missing vertex")
        if np.any((tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])):
            raise InvalidLatticeError("degenerate triangle: repeated vertex")
        area = _signed_areas(verts, tris)
        scale = np.ptp(verts, axis=0).max() if len(verts) else 1.0
        if np.any(np.abs(area) <= 1e-14 * scale**2):
            raise InvalidLatticeError("degenerate triangle: zero area")
        tris = np.where((area < 0)[:, None], tris[:, [0, 2, 1]], tris)
        count = _edge_counts(tris)
        if np.any(count > 2):
            raise InvalidLatticeError("an edge is shared by more than two triangles")
        boundary = np.unique(np.asarray(self.boundary, dtype=np.int64).reshape(-1))
        if boundary.size and (boundary[0] < 0 or boundary[-1] >= len(verts)):
            raise InvalidLatticeError("boundary vertex out of range")
        object.__setattr__(self, "vertices", _frozen(verts))
        object.__setattr__(self, "triangles", _frozen(tris))
        object.__setattr__(self, "boundary", _frozen(boundary))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def areas(self) -> np.ndarray:
        return _frozen(_signed_areas(self.vertices, self.triangles))

    @cached_property
    def edge_list(self) -> np.ndarray:
        """Unique undirected edges, each row sorted."""
        return _frozen(np.unique(_all_edges(self.triangles), axis=0))

    @cached_property
    def topological_boundary_edges(self) -> np.ndarray:
        """Edges incident to exactly one triangle."""
        keys, count = np.unique(_all_edges(self.triangles), axis=0, return_counts=True)
        return _frozen(keys[count == 1])

    def scaled(self, c: float) -> "Triangulation":
        return Triangulation(self.vertices * c, self.triangles, self.boundary)


def _all_edges(tris: np.ndarray) -> np.ndarray:
    e = np.concatenate([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]])
    return np.sort(e, axis=1)


def _edge_counts(tris: np.ndarray) -> np.ndarray:
    _, count = np.unique(_all_edges(tris), axis=0, return_counts=True)
    return count


def _corner_cotangents(tri: Triangulation) -> np.ndarray:
    """(T, 3) cotangents of the angle at each corner."""
    v = tri.vertices
    t = tri.triangles
    cots = np.empty(t.shape)
    for i in range(3):
        p = v[t[:, i]]
        a = v[t[:, (i + 1) % 3]] - p
        b = v[t[:, (i + 2) % 3]] - p
        dot = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        cots[:, i] = dot / cross
    return cots


def cotangent_weights(tri: Triangulation, check_definite: bool = True) -> WeightedGraph:
    """Graph whose Dirichlet energy equals the PL energy of ``tri``.

    Every triangle adds half the cotangent of each corner angle to the
    opposite edge, so interior edges get ``(cot a + cot b) / 2`` and edges on
    the mesh border ``cot a / 2``.  An empty boundary yields a zero-mean graph.
    """
    cots = _corner_cotangents(tri)
    t = tri.triangles
    opp = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
    half = 0.5 * np.concatenate([cots[:, 0], cots[:, 1], cots[:, 2]])
    keys = np.sort(opp, axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    weights = np.zeros(len(edges))
    np.add.at(weights, inverse.ravel(), half)
    return WeightedGraph(
        tri.n_vertices,
        edges,
        weights,
        tri.boundary,
        positions=tri.vertices,
        zero_mean_mode=len(tri.boundary) == 0,
        check_definite=check_definite,
    )


def pl_gradients(tri: Triangulation, f) -> np.ndarray:
    """Constant gradient of the affine interpolant on each triangle, (T, 2)."""
    vals = values_of(f, tri.n_vertices)
    v, t = tri.vertices, tri.triangles
    p0 = v[t[:, 0]]
    jac = np.stack([v[t[:, 1]] - p0, v[t[:, 2]] - p0], axis=1)  # rows are edge vectors
    rhs = np.stack([vals[t[:, 1]] - vals[t[:, 0]], vals[t[:, 2]] - vals[t[:, 0]]], axis=1)
    return np.linalg.solve(jac, rhs[..., None])[..., 0]


def pl_energy(tri: Triangulation, f) -> float:
    """Continuum Dirichlet energy of the piecewise-linear extension of ``f``."""
    grad = pl_gradients(tri, f)
    return float(np.sum(tri.areas * np.sum(grad**2, axis=1)))


def dilation_energy_ratio(mesh, f, c: float) -> float:
    """Energy of the dilated mesh over the original, same nodal values.

    ``mesh`` is a :class:`Triangulation` (ratio ``c**0 == 1``) or a sorted
    1D node array (ratio ``1 / c``).
    """
    if c <= 0:
        raise InvalidInputError("dilation factor must be positive")
    if isinstance(mesh, Triangulation):
        base = pl_energy(mesh, f)
        scaled = pl_energy(mesh.scaled(c), f)
    else:
        x = np.asarray(mesh, dtype=float)
        base = dirichlet_energy(interval_mesh(x), f)
        scaled = dirichlet_energy(interval_mesh(c * x), f)
    if base == 0:
        raise InvalidInputError("zero-energy field: the dilation ratio is undefined")
    return scaled / base


# ---------------------------------------------------------------- mesh builders


def split_grid_triangulation(nx: int, ny: int, spacing: float = 1.0, diagonal: str = "/") -> Triangulation:
    """``nx x ny`` rectangle of square cells, each cut along one diagonal.

    Vertex ``(i, j)`` (column i, row j) has id ``j * (nx + 1) + i``; the
    border vertices form the boundary.
    """
    if nx < 1 or ny < 1:
        raise InvalidInputError("grid needs at least one cell per side")
    if diagonal not in ("/", "\\"):
        raise InvalidInputError("diagonal must be '/' or '\\'")
    xs, ys = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    verts = np.stack([xs.ravel(), ys.ravel()], axis=1) * spacing
    vid = lambda i, j: j * (nx + 1) + i  # noqa: E731
    tris = []
    for j, i in itertools.product(range(ny), range(nx)):
        a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
        if diagonal == "/":
            tris += [(a, b, c), (a, c, d)]
        else:
            tris += [(a, b, d), (b, c, d)]
    border = np.flatnonzero((xs.ravel() == 0) | (xs.ravel() == nx) | (ys.ravel() == 0) | (ys.ravel() == ny))
    return Triangulation(verts, np.array(tris), border)


def equilateral_triangulation(nx: int, ny: int, spacing: float = 1.0) -> Triangulation:
    """Patch of the triangular lattice: ``ny + 1`` rows of ``nx + 1`` points.

    Odd rows are shifted by half a spacing; border vertices are the boundary.
    """
    if nx < 1 or ny < 1:
        raise InvalidInputError("patch needs at least one cell per side")
    h = np.sqrt(3.0) / 2.0
    verts = np.array([((i + 0.5 * (j % 2)) * spacing, j * h * spacing) for j in range(ny + 1) for i in range(nx + 1)])
    vid = lambda i, j: j * (nx + 1) + i  # noqa: E731
    tris = []
    for j in range(ny):
        for i in range(nx):
            if j % 2 == 0:
                tris.append((vid(i, j), vid(i + 1, j), vid(i, j + 1)))
                tris.append((vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)))
            else:
                tris.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
                tris.append((vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)))
    tri = np.array(tris)
    cols = np.arange(len(verts)) % (nx + 1)
    rows = np.arange(len(verts)) // (nx + 1)
    border = np.flatnonzero((cols == 0) | (cols == nx) | (rows == 0) | (rows == ny))
    return Triangulation(verts, tri, border)


def jittered_grid_triangulation(nx: int, ny: int, rng: np.random.Generator, amount: float = 0.3) -> Triangulation:
    """Split grid with interior vertices displaced at random.

    With ``amount`` up to about 0.35 the triangles stay positively oriented
    but obtuse angles (negative cotangent weights) become common.
    """
    base = split_grid_triangulation(nx, ny, diagonal="/")
    verts = np.array(base.vertices)
    inner = np.setdiff1d(np.arange(len(verts)), base.boundary)
    verts[inner] += rng.uniform(-amount, amount, size=(len(inner), 2))
    return Triangulation(verts, base.triangles, base.boundary)


def random_delaunay_triangulation(n_points: int, rng: np.random.Generator) -> Triangulation:
    """Delaunay mesh of random points in the unit square plus its corners."""
    from scipy.spatial import Delaunay

    pts = np.vstack([[[0, 0], [1, 0], [1, 1], [0, 1]], rng.uniform(0.02, 0.98, size=(n_points, 2))])
    dt = Delaunay(pts)
    hull = np.unique(dt.convex_hull)
    return Triangulation(pts, dt.simplices, hull)
