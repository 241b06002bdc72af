import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfflab.errors import InvalidInputError, UnsupportedGraphError
from gfflab.green import green_column, greens_matrix, harmonic_extension
from gfflab.lattice import WeightedGraph, build_box_lattice, build_cycle, build_grid, build_torus_grid, induced_subgraph
from gfflab.rng import make_rng
from gfflab.sampler import (
    TORUS_FFT_KAPPA,
    FieldSample,
    SpectralBasis,
    greens_covariance,
    hilbert_schmidt_sum,
    impose_boundary,
    ou_evolve,
    sample_dgff_direct,
    sample_massive,
    sample_square_eigenbasis,
    sample_torus_fft,
    torus_fft_covariance,
)


def max_z(x, target):
    prod = x[:, :, None] * x[:, None, :]
    se = prod.std(axis=0, ddof=1) / math.sqrt(len(x))
    return float(np.max(np.abs(prod.mean(axis=0) - target) / se))


def weighted_grid(side, seed):
    base = build_grid(side)
    w = make_rng(seed).uniform(0.3, 2.0, base.n_edges)
    return WeightedGraph(base.n_vertices, base.edges, w, base.boundary, grid_shape=base.grid_shape)


def test_same_seed_same_field():
    g = build_grid(9)
    assert np.array_equal(sample_dgff_direct(g, 5).values, sample_dgff_direct(g, 5).values)
    assert not np.array_equal(sample_dgff_direct(g, 5).values, sample_dgff_direct(g, 6).values)


def test_boundary_is_pinned():
    g = build_box_lattice(3, 3)
    s = sample_dgff_direct(g, 1)
    assert np.all(s.values[g.boundary] == 0)


def test_3x3_center_variance():
    g = build_grid(3)
    x = sample_dgff_direct(g, 2, n_samples=100_000).values[:, 4]
    assert abs(np.mean(x**2) - 0.25) <= 4 * np.std(x**2) / math.sqrt(len(x))


def test_dst_sampler_covariance():
    g = build_grid(6)  # uniform box: sine-transform path
    G = greens_matrix(g)
    x = sample_dgff_direct(g, 3, n_samples=50_000).values[:, G.vertices]
    assert max_z(x, G.matrix) <= 5


def test_dense_sampler_covariance_weighted():
    g = weighted_grid(6, 4)
    G = greens_matrix(g)
    x = sample_dgff_direct(g, 5, n_samples=50_000).values[:, G.vertices]
    assert max_z(x, G.matrix) <= 5


def test_incidence_sampler_variance_large_graph():
    g = weighted_grid(70, 6)  # 4624 free vertices: beyond the dense cap
    v = int(g.interior[len(g.interior) // 2])
    target = green_column(g, v)[v]
    n = 2000
    x = sample_dgff_direct(g, 7, n_samples=n).values[:, v]
    assert abs(np.mean(x**2) - target) <= 5 * np.std(x**2) / math.sqrt(n)


def test_incidence_sampler_rejects_signed_weights():
    base = build_grid(70)
    w = np.ones(base.n_edges)
    w[0] = -1e-3
    g = WeightedGraph(base.n_vertices, base.edges, w, base.boundary, check_definite=False)
    with pytest.raises(UnsupportedGraphError):
        sample_dgff_direct(g, 1)


def test_boundary_values_shift_the_mean():
    g = build_grid(6)
    bv = make_rng(8).standard_normal(len(g.boundary))
    s = sample_dgff_direct(g, 9, boundary_values=bv, n_samples=20_000)
    h = harmonic_extension(g, bv).values
    inner = s.values[:, g.interior]
    se = inner.std(axis=0) / math.sqrt(len(s))
    assert np.all(np.abs(inner.mean(axis=0) - h[g.interior]) <= 5 * se)
    assert np.allclose(s.values[:, g.boundary], bv)


def test_zero_mean_graph_samples():
    g = build_cycle(30)
    s = sample_dgff_direct(g, 10, n_samples=20_000)
    assert np.allclose(s.values.sum(axis=1), 0, atol=1e-10)
    G = greens_matrix(g).matrix
    var = (s.values**2).mean(axis=0)
    assert np.allclose(var, np.diag(G), rtol=0.05)


def test_torus_fft_uncalibrated_covariance_is_kappa_squared_pinv():
    pinv = greens_matrix(build_torus_grid(5, 6)).matrix
    assert np.allclose(torus_fft_covariance(5, 6), TORUS_FFT_KAPPA**2 * pinv, atol=1e-12)
    assert np.allclose(torus_fft_covariance(5, 6, calibrated=True), pinv, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(3, 12), st.integers(3, 12))
def test_torus_calibration_any_shape(m, n):
    pinv = greens_matrix(build_torus_grid(m, n)).matrix
    assert np.max(np.abs(torus_fft_covariance(m, n, calibrated=True) - pinv)) <= 1e-10


def test_torus_fft_mean_zero():
    s = sample_torus_fft(64, 64, 7)
    assert len(s.values) == 4096 and abs(s.values.mean()) < 1e-12


def test_torus_fft_batch_matches_singles_in_law():
    pinv = greens_matrix(build_torus_grid(4, 4)).matrix
    y = sample_torus_fft(4, 4, 11, calibrated=True, n_samples=50_000).values
    assert max_z(y, pinv) <= 5


def test_impose_boundary_gives_conditional_law():
    parent = build_torus_grid(8, 8)
    ids = np.array([i * 8 + j for i in range(1, 6) for j in range(1, 6)])
    sub = induced_subgraph(parent, ids)
    bv = make_rng(12).standard_normal(len(sub.graph.boundary))
    torus = sample_torus_fft(8, 8, 13, calibrated=True, n_samples=40_000)
    cond = impose_boundary(torus, sub, bv)
    g = sub.graph
    assert np.allclose(cond.values[:, g.boundary], bv)
    h = harmonic_extension(g, bv).values
    G = greens_matrix(g)
    x = cond.values[:, G.vertices] - h[G.vertices]
    assert max_z(x, G.matrix) <= 5


def test_impose_boundary_requires_subgraph():
    with pytest.raises(InvalidInputError):
        impose_boundary(sample_torus_fft(4, 4, 1), build_grid(4), np.zeros(12))


def test_massive_zero_mass_is_dgff():
    g = weighted_grid(7, 14)
    assert np.array_equal(sample_massive(g, 0.0, 3).values, sample_dgff_direct(g, 3).values)


def test_massive_covariance():
    g = build_grid(5)
    C = greens_covariance(g, 0.5)
    x = sample_massive(g, 0.5, 15, n_samples=50_000).values[:, g.interior]
    assert max_z(x, C[np.ix_(g.interior, g.interior)]) <= 5


def test_massive_rejects_negative_mass():
    with pytest.raises(InvalidInputError):
        sample_massive(build_grid(4), -1.0, 0)


def test_ou_zero_time_identity_and_seed():
    s = sample_dgff_direct(build_grid(5), 1, n_samples=3)
    out = ou_evolve(s, 0.0, 2)
    assert np.array_equal(out.values, s.values)
    a, b = ou_evolve(s, 0.3, 2), ou_evolve(s, 0.3, 2)
    assert np.array_equal(a.values, b.values)


def test_ou_requires_zero_boundary():
    g = build_grid(4)
    s = sample_dgff_direct(g, 1, boundary_values=np.ones(len(g.boundary)))
    with pytest.raises(InvalidInputError):
        ou_evolve(s, 1.0, 2)


def test_field_sample_validation():
    g = build_grid(4)
    with pytest.raises(InvalidInputError):
        FieldSample(g, np.zeros(3), 0, "direct")
    with pytest.raises(InvalidInputError):
        FieldSample(g, np.zeros(16), 0, "bogus")
    s = FieldSample(g, np.arange(16.0), 0, "direct")
    assert s.grid().shape == (4, 4)


def test_spectral_basis_orthonormal():
    b = SpectralBasis(30)
    assert b.orthonormality_error() < 1e-12
    lam = b.eigenvalues
    assert np.all(np.diff(lam) <= 0)
    assert tuple(b.modes[0]) == (1, 1)


def test_eigenbasis_pair_variance():
    b = SpectralBasis(20)

    def rho(x, y):
        return x * (1 - x) * y * (1 - y)

    field = sample_square_eigenbasis(20, 16, n_samples=20_000)
    vals = field.pair(rho)
    target = b.pair_variance(rho)
    assert abs(np.mean(vals**2) - target) <= 5 * np.std(vals**2) / math.sqrt(len(vals))


def test_point_variance_diverges_logarithmically():
    b = SpectralBasis(60)
    v = b.point_variance(0.5, 0.5)
    # partial sums keep growing as modes are added
    assert v[-1] > v[len(v) // 4] > v[10]


@pytest.mark.parametrize(
    "a,b,d,verdict",
    [(-1.0, 0.0, 2, True), (-0.5, 0.0, 2, False), (0.0, 0.0, 2, False), (-1.0, 0.0, 1, True), (0.0, 1.0, 3, True)],
)
def test_hilbert_schmidt_examples(a, b, d, verdict):
    assert hilbert_schmidt_sum(a, b, d, 1000)[1] is verdict
