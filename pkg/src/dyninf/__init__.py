"""Influence-community detection on directed weighted graphs, consensus
perturbation optimisation, and community-based graph matching."""

from .baselines import (
    PartitionResult,
    consensus_speed_ratio,
    edge_edit_distance,
    frobenius_distance,
    spectral_bisection,
    spectral_kmeans,
)
from .cdi import CDIResult, Community, assign_communities, cdi, find_leaders, resolve_overlaps
from .consensus import (
    ConsensusTrajectory,
    PerturbationVector,
    convergence_rate,
    reachable_from_support,
    rightmost_rate,
    simulate,
)
from .generators import (
    generate_er_outdegree,
    generate_flock,
    generate_knnr,
    generate_knnr_variable,
)
from .graphs import Graph, GraphError, GraphFormatError, LaplacianView, laplacian, load_graph, save_graph
from .matching import (
    MatchReport,
    VoxelCommunity,
    mean_matching_communities,
    overlap_percentage,
    reduce_community,
    reduce_scan,
)
from .optimizer import (
    LeaderSelection,
    OptimizationResult,
    cdi_perturbation_opt,
    combine,
    direct_baseline_opt,
    leader_opt,
    numeric_maximize,
    optimize_with_cdi,
    power_transform,
)
from .spectra import (
    InfluenceCoordinates,
    SpectralBasis,
    SpectralError,
    influence_coordinates,
    left_eigs,
    select_input_vectors,
)

__version__ = "0.1.0"
