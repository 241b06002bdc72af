import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfflab.errors import InvalidInputError, ResourceError
from gfflab.green import greens_matrix
from gfflab.lattice import build_grid
from gfflab.moments import (
    double_factorial,
    empirical_moment,
    functional_covariance,
    matching_partition_weights,
    perfect_matchings,
    schwinger,
    wick_moment,
)
from gfflab.rng import make_rng
from gfflab.sampler import sample_dgff_direct


def random_cov(n, seed):
    a = make_rng(seed).standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


@pytest.mark.parametrize("k", [2, 4, 6, 8, 10])
def test_matching_count(k):
    ms = list(perfect_matchings(k))
    assert len(ms) == double_factorial(k - 1)
    assert len(set(ms)) == len(ms)
    for m in ms:
        assert sorted(i for pair in m for i in pair) == list(range(k))


def test_matching_order_is_canonical():
    assert list(perfect_matchings(4)) == [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]


def test_odd_moment_zero():
    assert wick_moment(random_cov(4, 1), [0, 1, 2]).value == 0.0


def test_gaussian_power_moments():
    C = np.array([[2.0]])
    for k in (2, 4, 6, 8):
        assert wick_moment(C, [0] * k).value == pytest.approx(double_factorial(k - 1) * 2.0 ** (k // 2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([2, 4, 6]))
def test_permutation_symmetry(seed, k):
    rng = make_rng(seed)
    C = random_cov(5, seed)
    idx = rng.integers(0, 5, size=k)
    base = wick_moment(C, idx).value
    perm = rng.permutation(idx)
    assert wick_moment(C, perm).value == pytest.approx(base, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.1, 10.0), st.sampled_from([2, 4, 6]))
def test_scaling(seed, s, k):
    C = random_cov(4, seed)
    idx = make_rng(seed).integers(0, 4, size=k)
    assert wick_moment(s * C, idx).value == pytest.approx(s ** (k // 2) * wick_moment(C, idx).value, rel=1e-11)


def test_order_cap():
    with pytest.raises(ResourceError):
        wick_moment(np.eye(2), [0] * 14)


def test_index_range():
    with pytest.raises(InvalidInputError):
        wick_moment(np.eye(2), [0, 5])


def test_schwinger_two_point_and_four_point():
    g = build_grid(5)
    G = greens_matrix(g)
    pts = [6, 7, 12, 18]
    assert schwinger(pts[:2], G) == G(6, 7)
    expected = G(6, 7) * G(12, 18) + G(6, 12) * G(7, 18) + G(6, 18) * G(7, 12)
    assert schwinger(pts, G) == pytest.approx(expected, rel=1e-14)
    assert schwinger(pts[:3], G) == 0.0


def test_partition_weights():
    assert matching_partition_weights(np.ones((2, 2)), [0, 1])[0][2] == 1.0
    probs = [p for _, _, p in matching_partition_weights(np.ones((4, 4)), [0, 1, 2, 3])]
    assert probs == pytest.approx([1 / 3] * 3)
    C = np.abs(random_cov(6, 3)) + 0.1
    rows = matching_partition_weights(C, range(6))
    assert sum(p for _, _, p in rows) == pytest.approx(1.0, abs=1e-12)


def test_partition_weights_refuse_negative():
    C = np.array([[1.0, -0.5], [-0.5, 1.0]])
    with pytest.raises(InvalidInputError):
        matching_partition_weights(C, [0, 1])


def test_functional_covariance():
    g = build_grid(5)
    G = greens_matrix(g)
    rhos = make_rng(2).standard_normal((3, g.n_vertices))
    full = G.full()
    assert np.allclose(functional_covariance(G, rhos), rhos @ full @ rhos.T)


def test_empirical_moment_zero_samples():
    assert empirical_moment(np.zeros((10, 3)), None, [0, 1])[0] == 0.0


def test_empirical_moment_needs_two_samples():
    with pytest.raises(InvalidInputError):
        empirical_moment(np.zeros((1, 3)), None, [0])


def test_empirical_moment_stream_equals_array():
    x = make_rng(3).standard_normal((1000, 4))
    a = empirical_moment(x, None, [0, 1])
    b = empirical_moment(iter(np.array_split(x, 7)), None, [0, 1])
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    assert a[1] == pytest.approx(b[1], rel=1e-12)


def test_3x3_center_moments():
    g = build_grid(3)
    s = sample_dgff_direct(g, 7, n_samples=100_000)
    m2, se2 = empirical_moment(s, None, [4, 4])
    m4, se4 = empirical_moment(s, None, [4] * 4)
    assert abs(m2 - 0.25) <= 4 * se2
    assert abs(m4 - 3 / 16) <= 4 * se4


def test_functional_moments_monte_carlo():
    g = build_grid(6)
    G = greens_matrix(g)
    rhos = np.abs(make_rng(8).standard_normal((3, g.n_vertices)))
    C = functional_covariance(G, rhos)
    s = sample_dgff_direct(g, 9, n_samples=100_000)
    for idx in itertools.product(range(3), repeat=2):
        est, se = empirical_moment(s, rhos, idx)
        assert abs(est - wick_moment(C, idx).value) <= 5 * se
