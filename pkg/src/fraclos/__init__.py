"""Line-of-sight random geometric graphs in self-similar fractal domains."""
from ._backend import BACKEND
from .connectivity import ConnectivityReport, Network, analyze, build_network, expected_isolated
from .geometry import (
    DEFAULT_MAX_DEPTH,
    DegenerateAngleError,
    DegenerateMapError,
    FractalDomain,
    FractalSpec,
    SimilarityMap,
    VertexBudgetError,
    contains,
    contains_points,
    curve_polyline,
    derive_domain,
    domain_boundary_polyline,
    fold_to_top,
    make_domain,
    region_index,
    similarity_from_pairs,
)
from .sampling import NodeSet, derive_seed, sample_poisson_nodes, trial_seed
from .visibility import VisibilityVerdict, line_of_sight, segment_hits_edge_curve

__version__ = "0.1.0"
