"""Bias-corrected information criteria for subset regression.

Expected chi-square order statistics, the SRIC criterion and an adaptive
bias correction, plus a Monte Carlo harness for subset-selection bias.
"""

__version__ = "0.1.0"

from .criteria import (  # noqa: E402
    AdaptiveBiasTrace,
    AdaptiveCorrection,
    CriterionResult,
    adaptive_trace,
    aic_criterion,
    select_order,
    sric,
)
from .errors import (  # noqa: E402
    DatasetFormatError,
    DegenerateColumnError,
    DomainError,
    OrthogonalityError,
    PoleError,
    QuadratureError,
    TableTooShortError,
)
from .kernels import BACKEND  # noqa: E402
from .order_stats import (  # noqa: E402
    OrderStatCache,
    OrderStatProvider,
    OrderStatSpec,
    OrderStatTable,
    expected_order_stat,
    expected_order_stat_table,
)
from .regression import Dataset, SubsetPath, greedy_subset_path  # noqa: E402
from .simulation import ExperimentConfig, ExperimentReport, TrueModelSpec  # noqa: E402

__all__ = [
    "AdaptiveBiasTrace", "AdaptiveCorrection", "BACKEND", "CriterionResult", "Dataset",
    "DatasetFormatError", "DegenerateColumnError", "DomainError", "ExperimentConfig",
    "ExperimentReport", "OrderStatCache", "OrderStatProvider", "OrderStatSpec", "OrderStatTable",
    "OrthogonalityError", "PoleError", "QuadratureError", "SubsetPath", "TableTooShortError",
    "TrueModelSpec", "adaptive_trace", "aic_criterion", "expected_order_stat",
    "expected_order_stat_table", "greedy_subset_path", "select_order", "sric",
]
