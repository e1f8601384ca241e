"""Trajectory clustering and designed-path compliance analysis.

The package turns tracked road-user trajectories into an accountable
report of how people actually move through a designed space: broken
tracks are filtered, the rest are grouped by endpoints (DBSCAN over
source-destination vectors), each group is split by path shape (DTW plus
agglomerative clustering), and every path-cluster is scored against the
designed paths it should follow.
"""

from ._version import __version__
from .compliance import (
    ComplianceParams,
    ComplianceReport,
    DurationStats,
    ZoneEvent,
    classify_cluster,
    classify_path,
    classify_trajectories,
    duration_stats,
    forbidden_zone_events,
    mismatch_report,
    raw_sd_query,
    trajectory_deviation,
)
from .endpoints import (
    ClusterParams,
    Directives,
    EndpointVector,
    SDCluster,
    apply_directives,
    assign_gates,
    cluster_endpoints,
    dbscan,
    endpoint_vector,
    parse_directives,
)
from .errors import ParseError, PipelineError, TrajlabError, ValidationError
from .geometry import (
    Polyline,
    TrackPoint,
    Trajectory,
    TrajectorySet,
    arc_length,
    euclidean,
    point_in_polygon,
    point_to_polyline,
    polygon_is_simple,
    segments_intersect,
)
from .ingest import (
    DesignedPath,
    Gate,
    SceneSpec,
    Zone,
    parse_scene,
    parse_trajectories,
    scene_to_dict,
    write_trajectories,
)
from .pathcluster import (
    DistanceMatrix,
    PathCluster,
    PathClusterParams,
    cluster_paths,
    distance_matrix,
    dtw_distance,
    medoid,
)
from .pipeline import RunConfig, RunResult, config_from_manifest, load_config, run_pipeline
from .preprocess import FilterParams, ResampledPath, filter_broken, resample, resample_all
from .synth import Bundle, GroundTruth, SynthSpec, generate, parse_synth_spec, write_ground_truth

__all__ = [
    "__version__",
    "Bundle",
    "ClusterParams",
    "ComplianceParams",
    "ComplianceReport",
    "Directives",
    "DesignedPath",
    "DistanceMatrix",
    "DurationStats",
    "EndpointVector",
    "FilterParams",
    "Gate",
    "GroundTruth",
    "ParseError",
    "PathCluster",
    "PathClusterParams",
    "PipelineError",
    "Polyline",
    "ResampledPath",
    "RunConfig",
    "RunResult",
    "SceneSpec",
    "SDCluster",
    "SynthSpec",
    "TrackPoint",
    "Trajectory",
    "TrajectorySet",
    "TrajlabError",
    "ValidationError",
    "Zone",
    "ZoneEvent",
    "apply_directives",
    "arc_length",
    "assign_gates",
    "classify_cluster",
    "classify_path",
    "classify_trajectories",
    "cluster_endpoints",
    "cluster_paths",
    "config_from_manifest",
    "dbscan",
    "distance_matrix",
    "dtw_distance",
    "duration_stats",
    "endpoint_vector",
    "euclidean",
    "filter_broken",
    "forbidden_zone_events",
    "generate",
    "load_config",
    "medoid",
    "mismatch_report",
    "parse_directives",
    "parse_scene",
    "parse_synth_spec",
    "parse_trajectories",
    "point_in_polygon",
    "point_to_polyline",
    "polygon_is_simple",
    "raw_sd_query",
    "resample",
    "resample_all",
    "run_pipeline",
    "scene_to_dict",
    "segments_intersect",
    "trajectory_deviation",
    "write_ground_truth",
    "write_trajectories",
]
