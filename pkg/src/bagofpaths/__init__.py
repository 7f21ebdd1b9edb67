"""Bag-of-paths framework on weighted directed graphs.

Closed-form path weights with node constraints, betweenness measures,
covariance/correlation kernels and the bag-of-paths distance, together with a
path-enumeration oracle and a semi-supervised classification harness.
"""
from .exceptions import (
    BagOfPathsError,
    ConvergenceError,
    DegenerateVarianceError,
    GraphFormatError,
    NotStronglyConnectedError,
    NumericalDegeneracyError,
    SpectralRadiusError,
)
from .graph import (
    WeightedGraph,
    WeightMatrix,
    build_weight_matrix,
    load_graph,
    load_weight_matrix,
    reference_transition_matrix,
    spectral_radius,
    validate_weight_matrix,
)
from .paths import PathWeightTables, fundamental_matrix, hitting_matrix
from .measures import (
    KernelMatrix,
    MomentSet,
    absorption_probability,
    bop_distance,
    compute,
    cooccurrence_moments,
    copresence_moments,
    kernel,
    occurrence_betweenness,
    presence_betweenness,
)

__version__ = "0.1.0"
