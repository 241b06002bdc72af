"""Self-verification suites behind ``gff-lab verify``.

Each suite returns a list of :class:`Check` rows: a measured value, the
oracle it is compared with, the tolerance and the verdict.  Monte Carlo
checks report the largest z-score (deviation / standard error) over the
compared entries; exact checks report a relative error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .green import dirichlet_solve, green_column, greens_matrix, one_point_conditional
from .lattice import (
    WeightedGraph,
    build_box_lattice,
    build_grid,
    cotangent_weights,
    dirichlet_energy,
    dirichlet_inner,
    equilateral_triangulation,
    jittered_grid_triangulation,
    pl_energy,
    random_delaunay_triangulation,
    split_grid_triangulation,
)
from .markov import boustrophedon_order, conditional_law, decompose, default_f0, explore, explore_functional
from .moments import double_factorial, empirical_moment, perfect_matchings, wick_moment
from .rng import child_seeds, make_rng
from .sampler import sample_dgff_direct, sample_torus_fft, torus_fft_covariance

SUITES = ("covariance", "markov", "wick", "scaling", "explore", "fem")
Z_MAX = 5.0


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    measured: float
    oracle: float
    tolerance: str
    passed: bool


def _z_cov(x: np.ndarray, target: np.ndarray) -> float:
    """Largest |emp - target| / se over the entries of a zero-mean covariance."""
    n = len(x)
    prod = x[:, :, None] * x[:, None, :]
    emp = prod.mean(axis=0)
    se = prod.std(axis=0, ddof=1) / math.sqrt(n)
    ok = se > 0
    dev = np.abs(emp - target)
    if np.any(~ok & (dev > 1e-12)):
        return math.inf
    return float(np.max(dev[ok] / se[ok])) if ok.any() else 0.0


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def _random_grid_graph(side: int, rng: np.random.Generator) -> WeightedGraph:
    base = build_grid(side)
    w = rng.uniform(0.2, 2.0, size=base.n_edges)
    return WeightedGraph(base.n_vertices, base.edges, w, base.boundary, grid_shape=base.grid_shape)


# ---------------------------------------------------------------- suites


def covariance_suite(grid: int = 5, samples: int = 100_000, seed: int = 1, **_) -> list[Check]:
    s_box, s_torus = child_seeds(seed, 2)
    out = []
    g = build_grid(grid)
    G = greens_matrix(g)
    x = sample_dgff_direct(g, s_box, n_samples=samples).values[:, G.vertices]
    z = _z_cov(x, G.matrix)
    out.append(Check("covariance", f"direct {grid}x{grid} empirical vs Green's matrix (max z)", z, 0.0, f"<= {Z_MAX}", z <= Z_MAX))

    torus_cov = torus_fft_covariance(4, 4, calibrated=True)
    pinv = greens_matrix(sample_torus_fft(4, 4, 0).graph).matrix
    err = float(np.max(np.abs(torus_cov - pinv)))
    out.append(Check("covariance", "calibrated torus FFT covariance vs pseudoinverse (abs)", err, 0.0, "<= 1e-10", err <= 1e-10))
    y = sample_torus_fft(4, 4, s_torus, calibrated=True, n_samples=samples).values
    z = _z_cov(y, pinv)
    out.append(Check("covariance", "calibrated torus FFT 4x4 empirical vs pseudoinverse (max z)", z, 0.0, f"<= {Z_MAX}", z <= Z_MAX))
    return out


def markov_suite(grid: int = 5, samples: int = 100_000, seed: int = 1, **_) -> list[Check]:
    s_one, s_cases, s_cond = child_seeds(seed, 3)
    out = []
    g = build_grid(grid)
    y = int(np.ravel_multi_index((grid // 2, grid // 2), g.grid_shape))
    coeffs, var = one_point_conditional(g, y)
    phi = sample_dgff_direct(g, s_one, n_samples=samples).values
    resid = phi[:, y] - sum(c * phi[:, x] for x, c in coeffs.items())
    r2 = resid**2
    z = abs(r2.mean() - var) / (r2.std(ddof=1) / math.sqrt(samples))
    out.append(Check("markov", "one-point residual variance (z)", float(r2.mean()), var, f"z <= {Z_MAX}", z <= Z_MAX))
    others = np.setdiff1d(g.interior, [y])
    prod = resid[:, None] * phi[:, others]
    zc = np.max(np.abs(prod.mean(axis=0)) / (prod.std(axis=0, ddof=1) / math.sqrt(samples)))
    out.append(Check("markov", "residual vs other vertices, max z of cross moment", float(zc), 0.0, f"<= {Z_MAX}", zc <= Z_MAX))

    rng = make_rng(s_cases)
    worst = 0.0
    for _ in range(100):
        gg = _random_grid_graph(int(rng.integers(4, 8)), rng)
        size = int(rng.integers(1, len(gg.interior) + 1))
        U = rng.choice(gg.interior, size=size, replace=False)
        f = rng.standard_normal(gg.n_vertices)
        h, r = decompose(gg, U, f)
        e = dirichlet_energy(gg, f)
        worst = max(worst, abs(dirichlet_inner(gg, h, r)) / e, abs(dirichlet_energy(gg, h) + dirichlet_energy(gg, r) - e) / e)
    out.append(Check("markov", "decomposition orthogonality / Pythagoras, 100 cases (rel)", worst, 0.0, "<= 1e-10", worst <= 1e-10))

    U = np.array([v for v in g.interior if v != g.interior[0]])
    covs = [conditional_law(g, U, rng.standard_normal(g.n_vertices) * 3)[1].matrix for _ in range(5)]
    same = all(np.array_equal(covs[0], c) for c in covs[1:])
    out.append(Check("markov", "conditional covariance across 5 exteriors (identical)", float(not same), 0.0, "exact", same))

    phi = sample_dgff_direct(g, s_cond, n_samples=samples).values
    _, rem = decompose(g, U, phi)
    z = _z_cov(rem[:, U], covs[0])
    out.append(Check("markov", "empirical conditional covariance (max z)", z, 0.0, f"<= {Z_MAX}", z <= Z_MAX))
    return out


def wick_suite(grid: int = 5, samples: int = 100_000, seed: int = 1, **_) -> list[Check]:
    s_tuples, s_field = child_seeds(seed, 2)
    out = []
    counts_ok = all(sum(1 for _ in perfect_matchings(k)) == double_factorial(k - 1) for k in (2, 4, 6, 8))
    out.append(Check("wick", "matching counts (k-1)!! for k = 2..8", float(counts_ok), 1.0, "exact", counts_ok))

    C = make_rng(s_tuples).standard_normal((4, 4))
    C = C @ C.T
    four = C[0, 1] * C[2, 3] + C[0, 2] * C[1, 3] + C[0, 3] * C[1, 2]
    got = wick_moment(C, [0, 1, 2, 3]).value
    err = _rel(got, four)
    out.append(Check("wick", "k = 4 three-pairing expansion (rel)", err, 0.0, "<= 1e-14", err <= 1e-14))

    g = build_grid(grid)
    G = greens_matrix(g)
    rng = make_rng(s_tuples, 1)
    tuples = [rng.integers(0, len(G.vertices), size=int(k)) for k in rng.choice([2, 4, 6], size=10)]
    x = sample_dgff_direct(g, s_field, n_samples=samples).values[:, G.vertices]
    hits = 0
    for t in tuples:
        exact = wick_moment(G.matrix, t).value
        est, se = empirical_moment(x, None, t)
        hits += abs(est - exact) <= Z_MAX * se
    out.append(Check("wick", "random tuples within 5 standard errors", float(hits), 10.0, ">= 9 of 10", hits >= 9))
    return out


def _center_variance(d: int, n: int) -> float:
    g = build_box_lattice(d, n)
    c = g.n_vertices // 2
    return float(green_column(g, c)[c])


def scaling_suite(d: int | None = None, **_) -> list[Check]:
    dims = (1, 2, 3) if d is None else (d,)
    out = []
    for dim in dims:
        if dim == 1:
            ratio = _center_variance(1, 128) / _center_variance(1, 64)
            out.append(Check("scaling", "d=1 doubling ratio Var(n=128)/Var(n=64)", ratio, 2.0, "within 5%", abs(ratio / 2 - 1) <= 0.05))
        elif dim == 2:
            ns = np.array([8, 16, 32, 64])
            v = np.array([_center_variance(2, int(n)) for n in ns])
            slope, icpt = np.polyfit(np.log(ns), v, 1)
            fit = slope * np.log(ns) + icpt
            r2 = 1 - np.sum((v - fit) ** 2) / np.sum((v - v.mean()) ** 2)
            out.append(Check("scaling", f"d=2 log-linear fit R^2 (slope {slope:.4f})", float(r2), 1.0, "> 0.99", r2 > 0.99))
        elif dim == 3:
            v6, v12 = _center_variance(3, 6), _center_variance(3, 12)
            rel = abs(v12 - v6) / v12
            out.append(Check("scaling", "d=3 saturation |Var(12) - Var(6)| / Var(12)", rel, 0.0, "< 0.10", rel < 0.10))
        else:
            raise InvalidInputError("scaling suite covers d = 1, 2, 3")
    return out


def explore_suite(grid: int = 5, samples: int = 10_000, seed: int = 1, **_) -> list[Check]:
    s_field, s_coef = child_seeds(seed, 2)
    out = []
    g = build_grid(grid)
    f0 = default_f0(g)
    order = boustrophedon_order(g)
    phi = sample_dgff_direct(g, s_field, n_samples=samples).values
    trace = explore(g, f0, order, phi)
    inc = np.diff(trace.values, axis=1)
    dt = np.diff(trace.times)
    sq = inc**2
    se = sq.std(axis=0, ddof=1) / math.sqrt(samples)
    keep = dt > 1e-14
    z = float(np.max(np.abs(sq.mean(axis=0) - dt)[keep] / se[keep])) if keep.any() else 0.0
    flat = bool(np.all(np.abs(inc[:, ~keep]) < 1e-10))
    out.append(Check("explore", "increment variance vs time step (max z)", z, 0.0, f"<= {Z_MAX}", z <= Z_MAX and flat))
    i, j = np.triu_indices(inc.shape[1], 1)
    i, j = i[keep[i] & keep[j]], j[keep[i] & keep[j]]
    prod = inc[:, i] * inc[:, j]
    zc = float(np.max(np.abs(prod.mean(axis=0)) / (prod.std(axis=0, ddof=1) / math.sqrt(samples)))) if len(i) else 0.0
    out.append(Check("explore", "disjoint increment cross moments (max z)", zc, 0.0, f"<= {Z_MAX}", zc <= Z_MAX))

    rng = make_rng(s_coef)
    n = len(order)
    terms = [(float(rng.normal()), int(rng.integers(0, n + 1))) for _ in range(3)]
    f = sum(a * trace.projections[s] for a, s in terms)
    direct = np.array([phi[:10] @ (g.laplacian @ dirichlet_solve(g, np.sort(order[k:]), f)) for k in range(n + 1)]).T
    err = _rel(explore_functional(trace, terms)[:10], direct)
    out.append(Check("explore", "W_f(k) = sum a W(min(s, k)) for a constructed f (rel)", err, 0.0, "<= 1e-10", err <= 1e-10))
    return out


def fem_suite(seed: int = 1, **_) -> list[Check]:
    out = []
    rng = make_rng(seed)
    worst = 0.0
    for i in range(100):
        if i % 2:
            tri = random_delaunay_triangulation(int(rng.integers(10, 60)), rng)
        else:
            tri = jittered_grid_triangulation(int(rng.integers(3, 9)), int(rng.integers(3, 9)), rng)
        g = cotangent_weights(tri, check_definite=False)
        f = rng.standard_normal(tri.n_vertices)
        e = pl_energy(tri, f)
        worst = max(worst, abs(e - dirichlet_energy(g, f)) / e)
    out.append(Check("fem", "PL energy vs cotangent energy, 100 meshes (rel)", worst, 0.0, "<= 1e-12", worst <= 1e-12))

    g = cotangent_weights(split_grid_triangulation(6, 6))
    pos = g.positions
    d = pos[g.edges[:, 1]] - pos[g.edges[:, 0]]
    diag = np.all(d != 0, axis=1)
    inner = ~np.isin(g.edges, g.boundary).all(axis=1)
    ok = bool(np.all(g.weights[diag] == 0) and np.all(g.weights[~diag & inner] == 1))
    out.append(Check("fem", "split grid: diagonals 0, interior axis edges 1", float(ok), 1.0, "exact", ok))

    g = cotangent_weights(equilateral_triangulation(6, 6))
    w = g.weights[~np.isin(g.edges, g.boundary).all(axis=1)]
    err = float(np.max(np.abs(w - 3**-0.5)))
    out.append(Check("fem", "equilateral interior weight vs 3^(-1/2) (abs)", err, 3**-0.5, "<= 1e-14", err <= 1e-14))
    return out


def run_suite(name: str, **opts) -> list[Check]:
    table = {
        "covariance": covariance_suite,
        "markov": markov_suite,
        "wick": wick_suite,
        "scaling": scaling_suite,
        "explore": explore_suite,
        "fem": fem_suite,
    }
    if name not in table:
        raise InvalidInputError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    opts = {k: v for k, v in opts.items() if v is not None}
    return table[name](**opts)
