import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from gfflab.errors import InvalidInputError, ResourceError, UnsupportedGraphError
from gfflab.green import (
    box_eigenvalues,
    dirichlet_solve,
    green_column,
    greens_by_walk,
    greens_matrix,
    harmonic_extension,
    hitting_probabilities_by_walk,
    one_point_conditional,
    quadratic_green,
    solve_form,
)
from gfflab.lattice import WeightedGraph, build_box_lattice, build_cycle, build_grid, build_path, build_torus_grid
from gfflab.rng import make_rng

# frozen reference values (computed once from closed forms)
CENTER_3X3 = 0.25
CENTER_5X5 = 0.375
PATH_L1000_G23 = 1.994


def tridiagonal_inverse(L):
    ab = np.zeros((3, L - 1))
    ab[0, 1:], ab[1], ab[2, :-1] = -1.0, 2.0, -1.0
    return sla.solve_banded((1, 1), ab, np.eye(L - 1))


@pytest.mark.parametrize("L", [2, 4, 7, 20])
def test_path_against_tridiagonal_oracle(L):
    G = greens_matrix(build_path(L + 1))
    x = np.arange(1, L)
    closed = np.minimum.outer(x, x) * (L - np.maximum.outer(x, x)) / L
    assert np.allclose(tridiagonal_inverse(L), closed, atol=1e-12)
    assert np.allclose(G.matrix, closed, atol=1e-12)


def test_frozen_values():
    assert greens_matrix(build_grid(3))(4, 4) == pytest.approx(CENTER_3X3, abs=1e-15)
    assert greens_matrix(build_grid(5))(12, 12) == pytest.approx(CENTER_5X5, abs=1e-14)
    assert green_column(build_path(1001), 3)[2] == pytest.approx(PATH_L1000_G23, abs=1e-12)


def test_boundary_entries_are_zero():
    G = greens_matrix(build_grid(4))
    assert G(0, 5) == 0.0
    assert np.all(G.full()[0] == 0)


def test_torus_pseudoinverse_against_eigen_oracle():
    g = build_torus_grid(4, 6)
    lam, vec = np.linalg.eigh(g.laplacian.toarray())
    keep = lam > 1e-9
    oracle = (vec[:, keep] / lam[keep]) @ vec[:, keep].T
    G = greens_matrix(g)
    assert np.max(np.abs(G.matrix - oracle)) <= 1e-12
    assert np.allclose(G.matrix.sum(axis=1), 0, atol=1e-12)


def test_cycle_variance_closed_form():
    N = 12
    g = build_cycle(N)
    # Var phi(x) = (N^2 - 1) / (12 N) for unit weights
    assert np.allclose(np.diag(greens_matrix(g).matrix), (N**2 - 1) / (12 * N), rtol=1e-12)


def test_dense_cap():
    with pytest.raises(ResourceError):
        greens_matrix(build_grid(10), max_dense=10)


def test_green_column_matches_dense_on_weighted_graph():
    rng = make_rng(4)
    base = build_grid(6)
    g = WeightedGraph(base.n_vertices, base.edges, rng.uniform(0.1, 3, base.n_edges), base.boundary)
    G = greens_matrix(g)
    for x in g.interior[:5]:
        assert np.allclose(green_column(g, x)[g.interior], G.matrix[:, G.index_of([x])[0]], atol=1e-12)


def test_box_eigenvalues_match_dense_spectrum():
    g = build_grid(6)
    lam = np.sort(box_eigenvalues(g).ravel())
    dense = np.linalg.eigvalsh(g.reduced_laplacian.toarray())
    assert np.allclose(lam, dense, atol=1e-12)


def test_solve_form_against_dense():
    g = build_box_lattice(3, 3)
    rhs = make_rng(1).standard_normal(len(g.interior))
    assert np.allclose(g.reduced_laplacian @ solve_form(g, rhs), rhs, atol=1e-9)


def test_quadratic_green_matches_matrix():
    g = build_grid(7)
    rho = make_rng(9).standard_normal((3, g.n_vertices))
    G = greens_matrix(g).full()
    assert np.allclose(quadratic_green(g, rho), np.einsum("ij,jk,ik->i", rho, G, rho), rtol=1e-10)


def _sine_coefficient(j):
    # int_0^1 x(1-x) sin(pi j x) dx
    return 0.0 if j % 2 == 0 else 4.0 / (np.pi * j) ** 3


def test_finite_difference_quadratic_form_converges():
    # continuum value of the double integral of rho G rho for rho = x(1-x)y(1-y),
    # from the sine series with e_jk = 2 sin(pi j x) sin(pi k y)
    J = 201
    a = np.array([_sine_coefficient(j) for j in range(1, J + 1)])
    j = np.arange(1, J + 1)
    c = 2 * np.outer(a, a)
    continuum = np.sum(c**2 / (np.pi**2 * (j[:, None] ** 2 + j[None, :] ** 2)))
    errs = []
    for N in (16, 32, 64):
        g = build_grid(N + 1)
        xy = g.positions / N
        rho = xy[:, 0] * (1 - xy[:, 0]) * xy[:, 1] * (1 - xy[:, 1])
        h = 1.0 / N
        errs.append(abs(h**4 * quadratic_green(g, rho) - continuum) / continuum)
    assert errs[-1] < 1e-3
    # second-order convergence of the five-point scheme
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32))
def test_harmonic_extension_mean_value(seed):
    rng = make_rng(seed)
    g = build_grid(int(rng.integers(3, 9)))
    bv = rng.standard_normal(len(g.boundary))
    h = harmonic_extension(g, bv).values
    lap = g.laplacian @ h
    assert np.max(np.abs(lap[g.interior])) <= 1e-10 * (1 + np.abs(bv).max())
    assert np.allclose(h[g.boundary], bv)
    # maximum principle
    assert h.max() <= bv.max() + 1e-12 and h.min() >= bv.min() - 1e-12


def test_harmonic_extension_reproduces_affine():
    g = build_grid(9)
    f = 0.3 * g.positions[:, 0] - 1.2 * g.positions[:, 1] + 2
    assert np.allclose(harmonic_extension(g, f).values, f, atol=1e-12)


def test_dirichlet_solve_keeps_fixed_values():
    g = build_grid(6)
    vals = make_rng(2).standard_normal(g.n_vertices)
    free = g.interior[::2]
    out = dirichlet_solve(g, free, vals)
    fixed = np.setdiff1d(np.arange(g.n_vertices), free)
    assert np.array_equal(out[fixed], vals[fixed])
    assert np.allclose((g.laplacian @ out)[free], 0, atol=1e-12)


def test_one_point_conditional():
    g = build_grid(5)
    coeffs, var = one_point_conditional(g, 12)
    assert var == 0.25 and sorted(coeffs.values()) == [0.25] * 4
    with pytest.raises(InvalidInputError):
        one_point_conditional(g, 0)


def test_walk_estimate_path():
    est, se = greens_by_walk(build_path(5), 2, 2, 40_000, seed=11)
    assert abs(est - 1.0) <= 4 * se
    assert se < 0.02


def test_walk_on_weighted_graph():
    rng = make_rng(12)
    base = build_grid(5)
    g = WeightedGraph(base.n_vertices, base.edges, rng.uniform(0.5, 2.0, base.n_edges), base.boundary)
    G = greens_matrix(g)
    est, se = greens_by_walk(g, 6, 18, 100_000, seed=13)
    assert abs(est - G(6, 18)) <= 4 * se


def test_walk_rejects_signed_weights():
    g = WeightedGraph(4, np.array([[0, 1], [1, 2], [2, 0], [2, 3]]), np.array([1.0, 1.0, -0.2, 1.0]), [0])
    with pytest.raises(UnsupportedGraphError):
        greens_by_walk(g, 1, 2, 100, seed=1)


def test_walk_boundary_start_is_zero():
    assert greens_by_walk(build_path(5), 0, 2, 10, seed=1) == (0.0, 0.0)


def test_walk_seed_determinism():
    g = build_grid(5)
    assert greens_by_walk(g, 12, 7, 5000, seed=3) == greens_by_walk(g, 12, 7, 5000, seed=3)


def test_hitting_probabilities_match_harmonic_measure():
    # oracle: the harmonic extension of an indicator is the hitting probability
    g = build_grid(6)
    start = int(g.interior[3])
    n = 100_000
    emp = hitting_probabilities_by_walk(g, start, n, seed=21)
    for b in g.boundary[::3]:
        ind = np.zeros(g.n_vertices)
        ind[b] = 1.0
        p = harmonic_extension(g, ind).values[start]
        se = np.sqrt(max(p * (1 - p), 1e-12) / n)
        assert abs(emp[b] - p) <= 5 * se + 1e-12
    assert emp.sum() == pytest.approx(1.0)
