"""Stream-network Gaussian process toolkit.

Thin Python wrapper over the native core: network preprocessing, stream-distance
nearest neighbors, sparse-likelihood estimation, kriging prediction, regional
aggregation, synthetic network generation, and the batch pipeline.
"""

from ._s3n import (
    CovarianceParams,
    FactorizationError,
    FitResult,
    Flowline,
    Interval,
    NeighborEntry,
    NeighborGraph,
    NetworkConfig,
    OptimizerConfig,
    PairGeometry,
    PipelineConfig,
    PipelineResult,
    PredictionRecord,
    RegionalSummary,
    SiteInput,
    SitePoint,
    SnapConfig,
    StreamNetwork,
    SyntheticNetworkSpec,
    TopologyError,
    ValidationError,
    VecchiaContext,
    bootstrap_ci,
    build_neighbor_graph,
    cov_block,
    fit,
    generate_network,
    load_network,
    order_sites,
    pair_geometry,
    place_site,
    predict,
    predict_neighbors,
    reach_midpoints,
    read_flowlines,
    read_sites,
    regional_total,
    run_pipeline,
    save_network,
    simulate_ssn,
    snap_sites,
    write_flowlines,
)

__all__ = [
    "CovarianceParams",
    "FactorizationError",
    "FitResult",
    "Flowline",
    "Interval",
    "NeighborEntry",
    "NeighborGraph",
    "NetworkConfig",
    "OptimizerConfig",
    "PairGeometry",
    "PipelineConfig",
    "PipelineResult",
    "PredictionRecord",
    "RegionalSummary",
    "SiteInput",
    "SitePoint",
    "SnapConfig",
    "StreamNetwork",
    "SyntheticNetworkSpec",
    "TopologyError",
    "ValidationError",
    "VecchiaContext",
    "bootstrap_ci",
    "build_neighbor_graph",
    "cov_block",
    "fit",
    "generate_network",
    "load_network",
    "order_sites",
    "pair_geometry",
    "place_site",
    "predict",
    "predict_neighbors",
    "reach_midpoints",
    "read_flowlines",
    "read_sites",
    "regional_total",
    "run_pipeline",
    "save_network",
    "simulate_ssn",
    "snap_sites",
    "write_flowlines",
]
