"""Spatio-temporal graph forecasting with information-bottleneck structure distillation."""

from .data import (
    RawGridData,
    RawTrafficData,
    SplitDatasets,
    build_crime_dataset,
    build_traffic_dataset,
    corrupt_missing,
    split_series,
    split_series_crime,
    window_dataset,
)
from .distiller import bernoulli_kl, sample_keep_probs, score_edges, select_subgraph
from .errors import CheckpointError, ConfigError, NumericalError, ShapeError
from .estimator import STGIBForecaster
from .explain import (
    Explanation,
    edge_recovery_auc,
    extract_explanation,
    fidelity_plus,
    random_explanation,
    sparsity_plus,
)
from .graphs import (
    SpatialGraph,
    TemporalGraph,
    build_spatial_graph_gaussian,
    build_spatial_graph_grid,
    build_temporal_graph,
)
from .losses import huber_loss, mse_loss, total_loss
from .model import STGIBModel
from .schedules import PriorSchedule, lambda_value, prior_value
from .synthetic import SyntheticSpec, build_synthetic_dataset, generate_synthetic
from .training import EpochReport, TrainConfig, evaluate, train
from .types import (
    AblationFlags,
    DistillResult,
    ModelConfig,
    Scaler,
    STGraphDataset,
    STWindow,
    validate_window,
)

__version__ = "0.1.0"

__all__ = [
    "AblationFlags",
    "CheckpointError",
    "ConfigError",
    "DistillResult",
    "EpochReport",
    "Explanation",
    "ModelConfig",
    "NumericalError",
    "PriorSchedule",
    "RawGridData",
    "RawTrafficData",
    "STGIBForecaster",
    "STGIBModel",
    "STGraphDataset",
    "STWindow",
    "Scaler",
    "ShapeError",
    "SpatialGraph",
    "SplitDatasets",
    "SyntheticSpec",
    "TemporalGraph",
    "TrainConfig",
    "bernoulli_kl",
    "build_crime_dataset",
    "build_spatial_graph_gaussian",
    "build_spatial_graph_grid",
    "build_synthetic_dataset",
    "build_temporal_graph",
    "build_traffic_dataset",
    "corrupt_missing",
    "edge_recovery_auc",
    "evaluate",
    "extract_explanation",
    "fidelity_plus",
    "generate_synthetic",
    "huber_loss",
    "lambda_value",
    "mse_loss",
    "prior_value",
    "random_explanation",
    "sample_keep_probs",
    "score_edges",
    "select_subgraph",
    "sparsity_plus",
    "split_series",
    "split_series_crime",
    "total_loss",
    "train",
    "validate_window",
    "window_dataset",
]
