"""Domain Markov property and the exploration martingale."""
# %%
import numpy as np

from gfflab.lattice import build_grid, dirichlet_inner
from gfflab.markov import boustrophedon_order, decompose, default_f0, explore
from gfflab.sampler import sample_dgff_direct

g = build_grid(7)
phi = sample_dgff_direct(g, seed=1).values
U = g.interior[:10]
h, r = decompose(g, U, phi)
print("orthogonality <h, r>_grad =", dirichlet_inner(g, h, r))

# %% reveal the interior row by row
f0 = default_f0(g)
batch = sample_dgff_direct(g, seed=2, n_samples=20_000).values
trace = explore(g, f0, boustrophedon_order(g), batch)
print("t_k:", trace.times.round(3))
print("Var W_k:", trace.values.var(axis=0).round(3))
print("max |Var W_k - t_k| =", np.abs(trace.values.var(axis=0) - trace.times).max())
