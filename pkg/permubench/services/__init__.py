# Services module initialization

from .analysis import (
    AnalysisError,
    PredictionCorrelation,
    UndefinedCorrelationError,
    confusion,
    pearson,
    per_class_accuracy_delta,
    prediction_correlation,
    spearman,
)
from .dataset_service import (
    EmptyClassError,
    InsufficientExamplesError,
    class_mean_std,
    load_dataset,
    subset_per_class,
)
from .harness import ExperimentError, ExperimentService, SweepResult, evaluate, write_curve_csv
from .randomize import (
    LocalSwapSpec,
    PatchSpec,
    PermutationError,
    apply_permutation,
    build_permutation,
    compose,
    invert,
    make_full_permutation,
    make_local_swap_permutation,
    make_patch_permutation,
    select_channel,
)
from .report import ReportError, ReportService, write_line_chart_svg, write_pnm, write_sample_grid

__all__ = [
    "ExperimentService",
    "ReportService",
    "SweepResult",
    "PredictionCorrelation",
    "PatchSpec",
    "LocalSwapSpec",
    # Errors
    "AnalysisError",
    "EmptyClassError",
    "ExperimentError",
    "InsufficientExamplesError",
    "PermutationError",
    "ReportError",
    "UndefinedCorrelationError",
    # Operations
    "apply_permutation",
    "build_permutation",
    "class_mean_std",
    "compose",
    "confusion",
    "evaluate",
    "invert",
    "load_dataset",
    "make_full_permutation",
    "make_local_swap_permutation",
    "make_patch_permutation",
    "pearson",
    "per_class_accuracy_delta",
    "prediction_correlation",
    "select_channel",
    "spearman",
    "subset_per_class",
    "write_curve_csv",
    "write_line_chart_svg",
    "write_pnm",
    "write_sample_grid",
]
