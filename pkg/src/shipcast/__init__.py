"""shipcast: weekly retail demand forecasting feeding an integer
shipping-mode allocation optimizer.

The pipeline ingests transaction logs into a weekly series, compares an
MSTL decomposition forecaster against N-BEATS and N-HiTS, picks the most
accurate model by SMAPE, and converts its 4-week point forecast into a
provably optimal integer allocation across shipping modes (minimum total
weighted delivery days under budget, capacity, and service constraints).
"""

__version__ = "0.1.0"

from .ingest import (
    DataError,
    IngestReport,
    ModeStats,
    TransactionRecord,
    aggregate_weekly,
    extract_mode_stats,
    parse_transactions,
    temporal_split,
)
from .loess import LoessParams, loess_smooth
from .lp import LpProblem, LpSolution, ilp_solve, simplex_solve
from .mstl import MstlDecomposition, MstlParams, mstl_decompose, mstl_forecast, stl_decompose
from .nbeats import BasisSpec, NBeatsModel, basis_matrices, nbeats_train
from .nhits import NhitsModel, linear_interpolate, maxpool1d, nhits_train
from .pipeline import PipelineConfig, load_config, run_pipeline
from .series import (
    Forecast,
    ForecastConfig,
    MetricReport,
    WeeklySeries,
    mae,
    make_synthetic,
    nonlinear_benchmark,
    sliding_windows,
    smape,
)
from .shipping import (
    AllocationPlan,
    AllocationResult,
    ConstraintReport,
    ShippingInstance,
    ShippingMode,
    allocate,
    baseline_all_standard,
    baseline_uniform,
    build_shipping_lp,
    evaluate_plan,
    oracle_enumerate,
)

__all__ = [
    "AllocationPlan",
    "AllocationResult",
    "BasisSpec",
    "ConstraintReport",
    "DataError",
    "Forecast",
    "ForecastConfig",
    "IngestReport",
    "LoessParams",
    "LpProblem",
    "LpSolution",
    "MetricReport",
    "ModeStats",
    "MstlDecomposition",
    "MstlParams",
    "NBeatsModel",
    "NhitsModel",
    "PipelineConfig",
    "ShippingInstance",
    "ShippingMode",
    "TransactionRecord",
    "WeeklySeries",
    "aggregate_weekly",
    "allocate",
    "baseline_all_standard",
    "baseline_uniform",
    "basis_matrices",
    "build_shipping_lp",
    "evaluate_plan",
    "extract_mode_stats",
    "ilp_solve",
    "linear_interpolate",
    "load_config",
    "loess_smooth",
    "mae",
    "make_synthetic",
    "maxpool1d",
    "mstl_decompose",
    "mstl_forecast",
    "nbeats_train",
    "nhits_train",
    "nonlinear_benchmark",
    "oracle_enumerate",
    "parse_transactions",
    "run_pipeline",
    "simplex_solve",
    "sliding_windows",
    "smape",
    "stl_decompose",
    "temporal_split",
]
