"""Change-point detection for dynamic networks with Log-Euclidean Frechet statistics."""

from .errors import InputError, NumericalError
from .graph import (
    DynamicNetwork,
    EdgeEvent,
    GraphSnapshot,
    aggregate_edge_stream,
    laplacian,
)
from .spd import (
    default_floor,
    log_euclidean_distance,
    log_laplacians,
    matrix_exp,
    matrix_log,
    nearest_spd,
)
from .frechet import (
    SegmentStats,
    as_log_sequence,
    frechet_mean,
    frechet_variance,
    incremental_segment_stats,
    sigma_hat_sq,
)
from .cpd import (
    ChangePoint,
    ChangePointReport,
    DetectionConfig,
    StatisticCurve,
    binary_segmentation,
    bootstrap_quantile,
    brownian_bridge_quantile,
    detect_single,
    permutation_quantile,
    run_segment_test,
    statistic_curve,
)
from .sbm import Scenario, SbmRegime, generate_scenario, sample_snapshot

__version__ = "0.1.0"

__all__ = [
    "ChangePoint",
    "ChangePointReport",
    "DetectionConfig",
    "DynamicNetwork",
    "EdgeEvent",
    "GraphSnapshot",
    "InputError",
    "NumericalError",
    "SbmRegime",
    "Scenario",
    "SegmentStats",
    "StatisticCurve",
    "aggregate_edge_stream",
    "as_log_sequence",
    "binary_segmentation",
    "bootstrap_quantile",
    "brownian_bridge_quantile",
    "default_floor",
    "detect_single",
    "permutation_quantile",
    "run_segment_test",
    "frechet_mean",
    "frechet_variance",
    "generate_scenario",
    "incremental_segment_stats",
    "laplacian",
    "log_euclidean_distance",
    "log_laplacians",
    "matrix_exp",
    "matrix_log",
    "nearest_spd",
    "sample_snapshot",
    "sigma_hat_sq",
    "statistic_curve",
]
