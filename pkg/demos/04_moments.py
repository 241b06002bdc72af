"""Gaussian moments by summing over pairings."""
# %%
from gfflab.green import greens_matrix
from gfflab.lattice import build_grid
from gfflab.moments import empirical_moment, perfect_matchings, schwinger
from gfflab.sampler import sample_dgff_direct

print(list(perfect_matchings(4)))

g = build_grid(5)
G = greens_matrix(g)
pts = [6, 7, 12, 18]
exact = schwinger(pts, G)
s = sample_dgff_direct(g, seed=3, n_samples=200_000)
est, se = empirical_moment(s, None, pts)
print(f"exact {exact:.5f}  empirical {est:.5f} +/- {se:.5f}")
