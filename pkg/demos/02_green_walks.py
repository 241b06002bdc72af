"""Green's function from linear algebra and from random walks."""
# %%
from gfflab.green import greens_by_walk, greens_matrix, harmonic_extension
from gfflab.lattice import build_grid

g = build_grid(5)
G = greens_matrix(g)
center = 12  # vertex (2, 2)
print("exact G(center, center) =", G(center, center))

# %%
est, se = greens_by_walk(g, center, center, n_walks=100_000, seed=1)
print(f"walk estimate {est:.4f} +/- {se:.4f}")

# %% harmonic interpolation of boundary data
import numpy as np

bv = np.zeros(g.n_vertices)
bv[g.boundary] = g.boundary % 5
h = harmonic_extension(g, bv)
print(h.values.reshape(5, 5).round(3))
