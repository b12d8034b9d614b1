"""Kernel-based spatial random graphs: sampling, exponents, covers, experiments."""

from .model import (
    MarkedVertex,
    ModelParams,
    connection_prob,
    kernel_value,
)
from .exponents import (
    ExponentReport,
    exponent_report,
    xi_and_gamma,
    zeta_girg,
)
from .sampler import (
    SpatialGraph,
    VertexSet,
    build_graph,
    sample_graph,
    sample_vertices,
)
from .components import (
    ClusterStats,
    cluster_stats,
    component_labels,
)
from .cover import (
    CoverResult,
    check_certificates,
    connection_guarantee_check,
    cover,
    is_expandable,
)
from .backbone import (
    BackboneParams,
    BackboneResult,
    backbone_constants,
    construct_backbone,
    mark_ladder_path,
    nearest_backbone_set,
)
from .profile import (
    SuppressedProfile,
    classify_against_profile,
    cross_boundary_edge_bound_check,
    f_gamma,
    profile_count_slopes,
    suppressed_profile,
)
from .experiments import (
    CampaignResult,
    ExperimentRow,
    SlopeFit,
    cluster_size_campaign,
    estimate_cluster_decay,
    estimate_downward_boundary,
    estimate_giant_fraction,
    estimate_second_largest,
    fit_slope,
    wilson_interval,
)

__all__ = [
    "MarkedVertex",
    "ModelParams",
    "connection_prob",
    "kernel_value",
    "ExponentReport",
    "exponent_report",
    "xi_and_gamma",
    "zeta_girg",
    "SpatialGraph",
    "VertexSet",
    "build_graph",
    "sample_graph",
    "sample_vertices",
    "ClusterStats",
    "cluster_stats",
    "component_labels",
    "CoverResult",
    "check_certificates",
    "connection_guarantee_check",
    "cover",
    "is_expandable",
    "BackboneParams",
    "BackboneResult",
    "backbone_constants",
    "construct_backbone",
    "mark_ladder_path",
    "nearest_backbone_set",
    "CampaignResult",
    "ExperimentRow",
    "SlopeFit",
    "cluster_size_campaign",
    "estimate_cluster_decay",
    "estimate_downward_boundary",
    "estimate_giant_fraction",
    "estimate_second_largest",
    "fit_slope",
    "wilson_interval",
    "SuppressedProfile",
    "classify_against_profile",
    "cross_boundary_edge_bound_check",
    "f_gamma",
    "profile_count_slopes",
    "suppressed_profile",
]

__version__ = "0.1.0"
