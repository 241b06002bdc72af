"""Sampling the discrete Gaussian free field.

Draws fields on a box, a torus and a triangulated domain, and compares the
empirical covariance with the Green's function.
"""
# %%
import numpy as np

from gfflab.green import greens_matrix
from gfflab.lattice import build_grid, cotangent_weights, random_delaunay_triangulation
from gfflab.rng import make_rng
from gfflab.sampler import ou_evolve, sample_dgff_direct, sample_torus_fft

# %% box with zero boundary values
g = build_grid(65)
f = sample_dgff_direct(g, seed=1)
print("box field", f.grid().shape, "center value", f.grid()[32, 32])

# %% empirical covariance vs the Green's function on a small box
g5 = build_grid(5)
batch = sample_dgff_direct(g5, seed=2, n_samples=50_000).values
emp = batch.T @ batch / len(batch)
G = greens_matrix(g5).full()
print("max |empirical - G| =", np.abs(emp - G).max())

# %% torus, mean-zero normalization
t = sample_torus_fft(64, 64, seed=3)
print("torus mean", t.values.mean(), "variance", t.values.var())

# %% irregular triangulation with cotangent weights
tri = random_delaunay_triangulation(200, make_rng(4))
mesh = cotangent_weights(tri)
print("mesh field sample:", sample_dgff_direct(mesh, seed=5).values[:5])

# %% Ornstein-Uhlenbeck dynamics keep the law invariant
start = sample_dgff_direct(g5, seed=6, n_samples=20_000)
later = ou_evolve(start, 0.5, seed=7)
cross = (start.values * later.values).mean(axis=0)[12] / G[12, 12]
print("center autocorrelation after t=0.5:", cross, "expected", np.exp(-0.5))
