"""Piecewise linear energy equals the cotangent Dirichlet form."""
# %%
import numpy as np

from gfflab.lattice import cotangent_weights, dirichlet_energy, jittered_grid_triangulation, pl_energy
from gfflab.rng import make_rng

rng = make_rng(1)
tri = jittered_grid_triangulation(12, 12, rng)
g = cotangent_weights(tri)
f = rng.standard_normal(len(tri.vertices))
print("PL energy      ", pl_energy(tri, f))
print("Dirichlet form ", dirichlet_energy(g, f))
print("agree:", np.isclose(pl_energy(tri, f), dirichlet_energy(g, f)))
