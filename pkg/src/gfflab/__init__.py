"""Discrete Gaussian free fields on weighted graphs, tori and triangulations.

Exact samplers, Green's functions, Markov decompositions, exploration
martingales, Wick moments and thick-point statistics, plus a seeded
Monte Carlo harness that checks the structural identities of the field.
"""

__version__ = "0.1.0"

from .errors import (
    GFFError,
    InvalidInputError,
    InvalidLatticeError,
    NumericalError,
    ResourceError,
    UnsupportedGraphError,
)
from .lattice import (
    FieldFunction,
    SubGraph,
    Triangulation,
    WeightedGraph,
    build_box_lattice,
    build_cycle,
    build_grid,
    build_path,
    build_torus_grid,
    cotangent_weights,
    dilation_energy_ratio,
    dirichlet_energy,
    dirichlet_inner,
    induced_subgraph,
    pl_energy,
)
from .green import (
    GreensMatrix,
    dirichlet_solve,
    green_column,
    greens_by_walk,
    greens_matrix,
    harmonic_extension,
    one_point_conditional,
)
from .sampler import (
    FieldSample,
    SpectralBasis,
    hilbert_schmidt_sum,
    impose_boundary,
    ou_evolve,
    sample_dgff_direct,
    sample_massive,
    sample_square_eigenbasis,
    sample_torus_fft,
)
from .markov import ExplorationTrace, conditional_law, decompose, explore, explore_functional
from .moments import PairingSum, empirical_moment, matching_partition_weights, schwinger, wick_moment
from .analysis import (
    AverageProfile,
    box_dimension,
    circle_average,
    disc_average_profile,
    thick_points,
)
