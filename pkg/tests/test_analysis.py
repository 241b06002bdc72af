import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfflab.analysis import (
    box_dimension,
    circle_average,
    circle_average_map,
    circle_functional,
    circle_stencil,
    circle_variance,
    disc_average_map,
    disc_average_profile,
    eligible_mask,
    mask_coordinates,
    n_angles,
    radius_at,
    s_max_for,
    thick_point_masks,
    thick_points,
    variance_growth_rate,
)
from gfflab.errors import InvalidInputError
from gfflab.green import quadratic_green
from gfflab.lattice import build_grid
from gfflab.rng import make_rng
from gfflab.sampler import sample_dgff_direct


def test_angle_count():
    assert n_angles(2) == 64 and n_angles(8) == 64 and n_angles(8.5) == 68 and n_angles(100) == 800


def test_stencil_weights_sum_to_one():
    for r in (2.0, 3.7, 20.0):
        _, w = circle_stencil(r)
        assert w.sum() == pytest.approx(1.0, abs=1e-14)


def test_constant_field():
    grid = np.full((41, 41), 2.5)
    assert circle_average(grid, (20, 20), 9.3) == pytest.approx(2.5, abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(2.0, 15.0))
def test_affine_mean_value(a, b, r):
    i, j = np.meshgrid(np.arange(41.0), np.arange(41.0), indexing="ij")
    grid = 1.0 + a * i + b * j
    center = 1.0 + a * 20 + b * 20
    assert abs(circle_average(grid, (20, 20), r) - center) <= 1e-3 * max(1.0, abs(center))


def test_harmonic_quadratic_mean_value():
    i, j = np.meshgrid(np.arange(61.0) - 30, np.arange(61.0) - 30, indexing="ij")
    grid = i**2 - j**2 + 5
    assert abs(circle_average(grid, (30, 30), 12.0) - 5.0) <= 1e-3 * 5


def test_circle_outside_domain():
    with pytest.raises(InvalidInputError):
        circle_average(np.zeros((11, 11)), (5, 5), 6.0)
    with pytest.raises(InvalidInputError):
        circle_average(np.zeros((11, 11)), (5, 5), 1.5)


def test_circle_map_matches_pointwise():
    grid = make_rng(1).standard_normal((30, 33))
    m = circle_average_map(grid, 5.5)
    for c in [(6, 6), (15, 20), (23, 26)]:
        assert m[c] == pytest.approx(circle_average(grid, c, 5.5), abs=1e-12)
    assert np.isnan(m[0, 0])


def test_circle_functional_is_linear_view():
    g = build_grid(31)
    f = sample_dgff_direct(g, 2)
    rho = circle_functional(g, (15, 15), 7.0)
    assert rho @ f.values == pytest.approx(circle_average(f, (15, 15), 7.0), abs=1e-12)


def test_circle_variance_log_linear_monte_carlo():
    g = build_grid(257)
    center = (128, 128)
    radii = [32.0, 16.0, 8.0, 4.0]
    rhos = np.stack([circle_functional(g, center, r) for r in radii])
    vals = np.concatenate([sample_dgff_direct(g, 30 + k, n_samples=250).values @ rhos.T for k in range(8)])
    var = (vals**2).mean(axis=0)
    x = np.log(1 / np.array(radii))
    slope, icpt = np.polyfit(x, var, 1)
    r2 = 1 - np.sum((var - slope * x - icpt) ** 2) / np.sum((var - var.mean()) ** 2)
    assert r2 > 0.95
    exact = circle_variance(g, center, radii)
    se = (vals**2).std(axis=0) / math.sqrt(len(vals))
    assert np.all(np.abs(var - exact) <= 5 * se)


def test_variance_growth_rate_near_continuum_value():
    slope = variance_growth_rate(build_grid(513))
    assert slope == pytest.approx(1 / (2 * np.pi), rel=0.03)


def test_independence_at_separation():
    g = build_grid(129)
    x, y = (40, 64), (88, 64)
    r0, r1 = 12.0, 6.0
    inc = [circle_functional(g, c, r1) - circle_functional(g, c, r0) for c in (x, y)]
    vx, vy = quadratic_green(g, inc[0]), quadratic_green(g, inc[1])
    vsum = quadratic_green(g, inc[0] + inc[1])
    corr = (vsum - vx - vy) / (2 * math.sqrt(vx * vy))
    assert abs(corr) < 0.01
    vals = sample_dgff_direct(g, 41, n_samples=4000).values @ np.stack(inc).T
    emp = np.mean(vals[:, 0] * vals[:, 1])
    se = np.std(vals[:, 0] * vals[:, 1]) / math.sqrt(len(vals))
    assert abs(emp) <= 5 * se


def test_disc_profile_constant_and_convexity():
    grid = np.full((129, 129), -1.25)
    prof = disc_average_profile(grid, (64, 64), [1.0, 2.0, 3.0])
    assert np.allclose(prof.disc_means, -1.25)
    assert np.all(np.diff(prof.radii) < 0)
    field = make_rng(3).standard_normal((129, 129))
    prof = disc_average_profile(field, (64, 64), [1.5, 2.5])
    assert prof.s_max == pytest.approx(s_max_for((129, 129)))
    for t, a in zip(prof.t, prof.disc_means):
        s = np.linspace(t, prof.s_max, 200)
        b = [circle_average(field, (64, 64), r) for r in radius_at(s, (129, 129))]
        assert min(b) - 1e-12 <= a <= max(b) + 1e-12


def test_disc_profile_b_constant_beyond_t():
    # radially constant field near the center: B(s) is the same for all s
    i, j = np.meshgrid(np.arange(129.0) - 64, np.arange(129.0) - 64, indexing="ij")
    grid = np.where(i**2 + j**2 <= 40**2, 3.0, 0.0)
    prof = disc_average_profile(grid, (64, 64), [1.2])
    assert prof.disc_means[0] == pytest.approx(3.0, abs=1e-12)


def test_disc_map_matches_profile():
    field = make_rng(4).standard_normal((65, 65))
    amap = disc_average_map(field, 1.5)
    prof = disc_average_profile(field, (32, 32), [1.5])
    assert amap[32, 32] == pytest.approx(prof.disc_means[0], abs=1e-10)


def test_t_beyond_cutoff():
    with pytest.raises(InvalidInputError):
        disc_average_map(np.zeros((33, 33)), 3.0)


def test_thick_point_inclusion_and_a0_fraction():
    g = build_grid(257)
    norm = variance_growth_rate(g)
    fractions = []
    for seed in range(12):
        f = sample_dgff_direct(g, 100 + seed)
        masks = thick_point_masks(f, [0.0, 0.5, 1.0, 1.5, 2.0], 3.0, norm)
        counts = [masks[a].sum() for a in sorted(masks)]
        assert all(c0 >= c1 for c0, c1 in zip(counts, counts[1:]))
        assert np.all(masks[0.5] | ~masks[2.0])
        fractions.append(masks[0.0].sum() / eligible_mask((257, 257), 3.0).sum())
    assert 0.4 <= np.mean(fractions) <= 0.6


def test_thick_points_ids_and_validation():
    g = build_grid(65)
    f = sample_dgff_direct(g, 5)
    ids = thick_points(f, 0.5, 1.5)
    assert np.all(np.diff(ids) > 0)
    with pytest.raises(InvalidInputError):
        thick_points(f, 2.5, 1.5)
    with pytest.raises(InvalidInputError):
        thick_points(f.grid(), 0.5, 1.5)  # a bare array needs an explicit normalization


def test_box_dimension_controls():
    size = 257
    scales = [4, 8, 16, 32, 64]
    full = mask_coordinates(np.ones((size, size), dtype=bool))
    assert box_dimension(full, size, scales)[0] == pytest.approx(2.0, abs=0.05)
    row = np.stack([np.full(size, 7), np.arange(size)], axis=1)
    assert box_dimension(row, size, scales)[0] == pytest.approx(1.0, abs=0.1)
    point = np.array([[3, 3]])
    assert box_dimension(point, size, scales)[0] == pytest.approx(0.0, abs=1e-12)


def test_box_dimension_errors():
    with pytest.raises(InvalidInputError):
        box_dimension(np.zeros((0, 2)), 10, [2, 4])
    with pytest.raises(InvalidInputError):
        box_dimension(np.array([[1, 1]]), 10, [2])
