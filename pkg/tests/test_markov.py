import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfflab.errors import InvalidInputError
from gfflab.green import greens_matrix
from gfflab.lattice import WeightedGraph, build_grid, build_path, dirichlet_energy, dirichlet_inner
from gfflab.markov import (
    boustrophedon_order,
    conditional_law,
    decompose,
    default_f0,
    explore,
    explore_functional,
    exploration_projections,
)
from gfflab.rng import make_rng
from gfflab.sampler import sample_dgff_direct


def weighted_grid(side, rng):
    base = build_grid(side)
    return WeightedGraph(base.n_vertices, base.edges, rng.uniform(0.2, 2.0, base.n_edges), base.boundary, grid_shape=base.grid_shape)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_decomposition_is_orthogonal(seed):
    rng = make_rng(seed)
    g = weighted_grid(int(rng.integers(4, 8)), rng)
    U = rng.choice(g.interior, size=int(rng.integers(1, len(g.interior) + 1)), replace=False)
    f = rng.standard_normal(g.n_vertices)
    h, r = decompose(g, U, f)
    e = dirichlet_energy(g, f)
    assert abs(dirichlet_inner(g, h, r)) <= 1e-10 * e
    assert np.allclose(h + r, f)
    outside = np.setdiff1d(np.arange(g.n_vertices), U)
    assert np.all(r[outside] == 0)


def test_conditional_covariance_is_inverse_block():
    g = build_grid(6)
    U = g.interior[:7]
    mean, cov = conditional_law(g, U, np.zeros(g.n_vertices))
    assert np.allclose(mean, 0)
    lap = g.laplacian[U][:, U].toarray()
    assert np.allclose(cov.matrix @ lap, np.eye(len(U)), atol=1e-12)


def test_conditional_law_whole_interior_is_green():
    g = build_grid(5)
    _, cov = conditional_law(g, g.interior, np.zeros(g.n_vertices))
    assert np.allclose(cov.matrix, greens_matrix(g).matrix, atol=1e-13)


def test_conditional_mean_is_harmonic():
    g = build_grid(6)
    U = g.interior[2:10]
    ext = make_rng(3).standard_normal(g.n_vertices)
    mean, _ = conditional_law(g, U, ext)
    full = ext.copy()
    full[np.sort(U)] = mean
    assert np.allclose((g.laplacian @ full)[U], 0, atol=1e-12)


def test_subset_validation():
    g = build_grid(5)
    with pytest.raises(InvalidInputError):
        decompose(g, [0], np.zeros(25))
    with pytest.raises(InvalidInputError):
        decompose(g, [], np.zeros(25))


def test_boustrophedon_order():
    g = build_grid(5)
    order = boustrophedon_order(g)
    rows = np.array(order) // 5
    cols = np.array(order) % 5
    assert list(rows) == [1, 1, 1, 2, 2, 2, 3, 3, 3]
    assert list(cols) == [1, 2, 3, 3, 2, 1, 1, 2, 3]


def test_default_f0_unit_norm():
    g = build_grid(6)
    assert dirichlet_energy(g, default_f0(g)) == pytest.approx(1.0)


def test_times_nondecreasing_and_final():
    g = build_grid(6)
    f0 = default_f0(g)
    proj, times = exploration_projections(g, f0, boustrophedon_order(g))
    assert times[0] == pytest.approx(0.0, abs=1e-14)
    assert np.all(np.diff(times) >= -1e-14)
    assert times[-1] == pytest.approx(1.0)
    assert np.allclose(proj[-1], f0)


def test_final_martingale_value_is_inner_product():
    g = build_grid(6)
    f0 = default_f0(g)
    phi = sample_dgff_direct(g, 4, n_samples=5).values
    trace = explore(g, f0, boustrophedon_order(g), phi)
    assert np.allclose(trace.values[:, -1], dirichlet_inner(g, phi, f0))
    assert np.allclose(trace.values[:, 0], 0)


def test_increment_variance_path():
    # on a path the increments are independent with variances equal to the time steps
    g = build_path(8)
    f0 = default_f0(g)
    phi = sample_dgff_direct(g, 5, n_samples=40_000).values
    trace = explore(g, f0, g.interior, phi)
    inc = np.diff(trace.values, axis=1)
    dt = np.diff(trace.times)
    se = (inc**2).std(axis=0) / np.sqrt(len(inc))
    assert np.all(np.abs((inc**2).mean(axis=0) - dt) <= 5 * se + 1e-14)


def test_explore_functional_and_reveal_index_validation():
    g = build_grid(5)
    phi = sample_dgff_direct(g, 6, n_samples=3).values
    trace = explore(g, default_f0(g), boustrophedon_order(g), phi)
    out = explore_functional(trace, [(2.0, 4)])
    assert np.allclose(out[:, 4:], 2.0 * trace.values[:, [4]])
    with pytest.raises(InvalidInputError):
        explore_functional(trace, [(1.0, 99)])


def test_ordering_must_cover_interior():
    g = build_grid(5)
    with pytest.raises(InvalidInputError):
        exploration_projections(g, default_f0(g), g.interior[:-1])
