"""Circle and disc averages, thick points and box-counting dimension.

Fields are 2D lattice fields (a :class:`FieldSample` on a graph with a 2D
``grid_shape``, or a bare 2D array).  Lengths are measured in lattice
spacings; the averaging radius at scale ``s`` is ``exp(-s) * size`` where
``size`` is the side length of the domain, ``grid side - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import InvalidInputError
from .green import quadratic_green
from .lattice import WeightedGraph

MIN_RADIUS = 2.0


def n_angles(radius: float) -> int:
    return max(64, math.ceil(8 * radius))


def _as_grid(field_) -> np.ndarray:
    if hasattr(field_, "grid"):
        grid = field_.grid()
    else:
        grid = np.asarray(field_, dtype=float)
    if grid.ndim not in (2, 3):
        raise InvalidInputError("expected a 2D lattice field (or a batch of them)")
    if grid.ndim == 3 and hasattr(field_, "graph") and len(field_.graph.grid_shape) != 2:
        raise InvalidInputError("expected a 2D lattice field")
    return grid


def circle_stencil(radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer offsets and weights of the bilinear circle average.

    The weights sum to one; ``sum w * f[c + offset]`` is the mean of the
    bilinear interpolant at ``n_angles(radius)`` equispaced points.
    """
    if radius < MIN_RADIUS:
        raise InvalidInputError(f"radius must be at least {MIN_RADIUS} lattice spacings")
    m = n_angles(radius)
    theta = 2.0 * np.pi * np.arange(m) / m
    pts = radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    base = np.floor(pts).astype(np.int64)
    frac = pts - base
    offsets = []
    weights = []
    for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
        wi = frac[:, 0] if di else 1.0 - frac[:, 0]
        wj = frac[:, 1] if dj else 1.0 - frac[:, 1]
        offsets.append(base + [di, dj])
        weights.append(wi * wj / m)
    offsets = np.concatenate(offsets)
    weights = np.concatenate(weights)
    uniq, inv = np.unique(offsets, axis=0, return_inverse=True)
    acc = np.zeros(len(uniq))
    np.add.at(acc, inv.ravel(), weights)
    keep = acc != 0
    return uniq[keep], acc[keep]


def _reach(radius: float) -> int:
    return int(math.ceil(radius))


def _check_inside(shape, center, radius):
    r = _reach(radius)
    i, j = center
    if i - r < 0 or j - r < 0 or i + r > shape[0] - 1 or j + r > shape[1] - 1:
        raise InvalidInputError("averaging circle leaves the domain")


def circle_average(field_, center, radius: float) -> np.ndarray | float:
    """Mean of the bilinearly interpolated field on a circle about a grid point."""
    grid = _as_grid(field_)
    _check_inside(grid.shape[-2:], center, radius)
    off, w = circle_stencil(radius)
    vals = grid[..., center[0] + off[:, 0], center[1] + off[:, 1]] @ w
    return float(vals) if np.ndim(vals) == 0 else vals


def circle_functional(g: WeightedGraph, center, radius: float) -> np.ndarray:
    """Weight vector ``rho`` with ``circle_average(h) = rho @ h.values``."""
    shape = g.grid_shape
    if shape is None or len(shape) != 2:
        raise InvalidInputError("graph must be a 2D grid")
    _check_inside(shape, center, radius)
    off, w = circle_stencil(radius)
    rho = np.zeros(g.n_vertices)
    ids = np.ravel_multi_index((center[0] + off[:, 0], center[1] + off[:, 1]), shape)
    np.add.at(rho, ids, w)
    return rho


def circle_average_map(grid: np.ndarray, radius: float) -> np.ndarray:
    """Circle averages about every grid point; NaN where the circle leaves the domain."""
    grid = np.asarray(grid, dtype=float)
    off, w = circle_stencil(radius)
    r = _reach(radius)
    kernel = np.zeros((2 * r + 1, 2 * r + 1))
    kernel[off[:, 0] + r, off[:, 1] + r] = w
    # correlation = convolution with the flipped kernel
    out = fftconvolve(grid, kernel[::-1, ::-1], mode="same")
    mask = np.zeros(grid.shape, dtype=bool)
    mask[r : grid.shape[0] - r, r : grid.shape[1] - r] = True
    return np.where(mask, out, np.nan)


def domain_size(shape) -> float:
    return float(min(shape) - 1)


def s_max_for(shape) -> float:
    """Lattice cutoff: the scale at which the radius is two spacings."""
    return math.log(domain_size(shape) / (2.0 * 1.0))


def radius_at(s, shape) -> np.ndarray:
    return np.exp(-np.asarray(s, dtype=float)) * domain_size(shape)


def _s_grid(t: float, s_max: float, ds: float) -> np.ndarray:
    n = max(2, int(math.ceil((s_max - t) / ds)) + 1)
    return np.linspace(t, s_max, n)


def _disc_weights(s: np.ndarray) -> np.ndarray:
    """Trapezoid weights of ``exp(t - s)`` on ``s``, renormalized to sum to one."""
    f = np.exp(s[0] - s)
    h = np.diff(s)
    w = np.zeros_like(s)
    w[:-1] += 0.5 * h * f[:-1]
    w[1:] += 0.5 * h * f[1:]
    return w / w.sum()


@dataclass(frozen=True)
class AverageProfile:
    center: tuple[int, int]
    t: np.ndarray
    radii: np.ndarray
    circle_means: np.ndarray
    disc_means: np.ndarray
    s_max: float
    meta: dict = field(default_factory=dict)


def disc_average_profile(field_, center, t_grid, ds: float = 0.05) -> AverageProfile:
    """Circle means ``B(t)`` and radius-averaged means ``A(t)`` at one center.

    ``A(t) = int_t^{s_max} B(s) e^{t-s} ds`` with the weights renormalized
    over the truncated range (trapezoidal rule on a step of about ``ds``).
    """
    grid = _as_grid(field_)
    shape = grid.shape[-2:]
    t_grid = np.asarray(t_grid, dtype=float)
    order = np.argsort(t_grid)
    smax = s_max_for(shape)
    if np.any(t_grid >= smax):
        raise InvalidInputError(f"t must stay below the lattice cutoff s_max = {smax:.4f}")
    radii = radius_at(t_grid, shape)
    _check_inside(shape, center, radii.max())
    b = np.array([circle_average(grid, center, r) for r in radii])
    a = np.empty_like(b)
    for i, t in enumerate(t_grid):
        s = _s_grid(t, smax, ds)
        bs = np.array([circle_average(grid, center, r) for r in radius_at(s, shape)])
        a[i] = np.moveaxis(bs, 0, -1) @ _disc_weights(s)
    rev = order[::-1]
    return AverageProfile(
        tuple(int(c) for c in center),
        t_grid[order],
        radii[order],
        np.moveaxis(b[order], 0, -1) if b.ndim > 1 else b[order],
        np.moveaxis(a[order], 0, -1) if a.ndim > 1 else a[order],
        smax,
        {"ds": ds, "n_angles_max": n_angles(radii[rev[0]] if len(rev) else 0)},
    )


def disc_average_map(grid: np.ndarray, t: float, ds: float = 0.05) -> np.ndarray:
    """``A(t)`` about every grid point; NaN where the largest disc does not fit."""
    grid = np.asarray(grid, dtype=float)
    smax = s_max_for(grid.shape)
    if t >= smax:
        raise InvalidInputError(f"t must stay below the lattice cutoff s_max = {smax:.4f}")
    s = _s_grid(t, smax, ds)
    w = _disc_weights(s)
    out = np.zeros(grid.shape)
    for si, wi in zip(s, w):
        out += wi * circle_average_map(grid, float(radius_at(si, grid.shape)))
    return out


def circle_variance(g: WeightedGraph, center, radii) -> np.ndarray:
    """Exact variance ``rho^T G rho`` of circle averages at the given radii."""
    rhos = np.stack([circle_functional(g, center, r) for r in np.atleast_1d(radii)])
    return np.atleast_1d(quadratic_green(g, rhos))


_SLOPE_CACHE: dict = {}


def variance_growth_rate(g: WeightedGraph, n_scales: int = 8) -> float:
    """Least-squares slope of exact ``Var B(s)`` against ``s`` at the grid center.

    Scales run from the largest circle that fits down to four spacings.
    """
    key = (g.grid_shape, float(g.weights[0]) if len(g.weights) else 0.0, n_scales)
    if key in _SLOPE_CACHE and _SLOPE_CACHE[key][0] is g:
        return _SLOPE_CACHE[key][1]
    shape = g.grid_shape
    center = (shape[0] // 2, shape[1] // 2)
    r_hi = min(center) - 2
    s = np.linspace(-math.log(r_hi / domain_size(shape)), -math.log(4.0 / domain_size(shape)), n_scales)
    var = circle_variance(g, center, radius_at(s, shape))
    slope = float(np.polyfit(s, var, 1)[0])
    _SLOPE_CACHE[key] = (g, slope)
    return slope


def eligible_mask(shape, t: float) -> np.ndarray:
    """Grid points whose disc of radius ``exp(-t) * size`` fits inside the domain."""
    r = _reach(float(radius_at(t, shape)))
    mask = np.zeros(shape, dtype=bool)
    mask[r : shape[0] - r, r : shape[1] - r] = True
    return mask


def _normalization(field_, normalization):
    if normalization is None:
        if not hasattr(field_, "graph"):
            raise InvalidInputError("pass the normalization explicitly for bare arrays")
        normalization = variance_growth_rate(field_.graph)
    if normalization <= 0:
        raise InvalidInputError("normalization must be positive")
    return float(normalization)


def thick_point_masks(field_, a_values, t: float, normalization: float | None = None, ds: float = 0.05) -> dict:
    """Masks for several thickness values sharing one ``A(t)`` map."""
    a_values = [float(a) for a in a_values]
    if any(not 0 <= a <= 2 for a in a_values):
        raise InvalidInputError("thickness a must lie in [0, 2]")
    if t <= 0:
        raise InvalidInputError("t must be positive")
    grid = _as_grid(field_)
    sigma = math.sqrt(_normalization(field_, normalization))
    amap = np.nan_to_num(disc_average_map(grid, t, ds), nan=-np.inf)
    ok = eligible_mask(grid.shape, t)
    return {a: ok & (amap >= math.sqrt(a) * sigma * t) for a in a_values}


def thick_point_mask(field_, a: float, t: float, normalization: float | None = None, ds: float = 0.05) -> np.ndarray:
    """Boolean grid of points with ``A(t) / (sigma t) >= sqrt(a)``, ``sigma = sqrt(normalization)``."""
    return thick_point_masks(field_, [a], t, normalization, ds)[float(a)]


def thick_points(field_, a: float, t: float, normalization: float | None = None, ds: float = 0.05) -> np.ndarray:
    """Sorted vertex ids of the ``a``-thick points at scale ``t``.

    ``normalization`` is the variance growth of the circle means per unit
    ``t``; dividing by its square root gives the profile unit growth.  By
    default it is estimated exactly with :func:`variance_growth_rate`.
    """
    mask = thick_point_mask(field_, a, t, normalization, ds)
    return np.flatnonzero(mask.ravel())


def box_dimension(points, size: int, scales) -> tuple[float, dict]:
    """Box-counting slope of a lattice point set.

    ``points`` are integer coordinates (``(N, d)``) in ``[0, size - 1]``;
    boxes of side ``s`` tile ``[0, size - 1]`` (the last closed edge is
    folded into the final box).  Returns the least-squares slope of
    ``log N(s)`` against ``log(1/s)`` and fit diagnostics.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
    if pts.size == 0:
        raise InvalidInputError("box dimension of an empty set is undefined")
    scales = np.asarray(sorted(set(float(s) for s in scales)))
    if len(scales) < 2:
        raise InvalidInputError("need at least two scales")
    extent = size - 1
    counts = []
    for s in scales:
        n_boxes = max(1, int(math.ceil(extent / s)))
        idx = np.minimum(np.floor(pts / s).astype(np.int64), n_boxes - 1)
        counts.append(len(np.unique(idx, axis=0)))
    counts = np.array(counts, dtype=float)
    x = np.log(1.0 / scales)
    y = np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), {"scales": scales, "counts": counts, "intercept": float(intercept), "r2": float(r2)}


def mask_coordinates(mask: np.ndarray) -> np.ndarray:
    return np.argwhere(mask)
