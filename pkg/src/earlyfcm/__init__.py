"""Early-stopped fuzzy c-means image classification with calibrated thresholds.

The package clusters image pixels with fuzzy c-means, learns how the
objective's per-iteration change rate maps to partition accuracy, and uses
that calibration to stop future clustering runs as soon as a desired
accuracy is safe — then prices the compute time saved.

Core flow: :func:`run_calibration` fits a threshold model from a corpus,
:func:`classify_record` clusters one image with early stopping,
:func:`run_evaluation` measures achieved accuracy and time fractions, and
:func:`cost_from_report` converts saved hours into dollars.
"""

from .calibration import (
    DEFAULT_ACCURACY_GRID,
    CalibrationModel,
    CalibrationPoint,
    Scaler,
    change_rate,
    collect_calibration_points,
    fit_threshold_model,
    load_model,
    save_model,
    threshold_for,
)
from .cost import (
    CostReport,
    PriceSheet,
    build_cost_report,
    compute_cost,
    cost_effectiveness,
    cost_report_document,
    extrapolate_savings,
    format_cost_report,
    round_cents,
    total_time,
    write_cost_report,
)
from .earlystop import (
    AccuracySummary,
    EarlyStopResult,
    EvaluationRecord,
    EvaluationReport,
    classify_early_stop,
    evaluate_corpus,
    evaluate_early_stop,
    load_report,
    report_document,
    write_accuracy_table,
    write_report_json,
    write_time_table,
)
from .errors import (
    CalibrationError,
    ConfigurationError,
    DegenerateClusterError,
    DegenerateFitError,
    EarlyFcmError,
    IngestionError,
    InputError,
    ModelVersionError,
    NumericError,
    OutputError,
    ParseError,
    SchemaError,
)
from .fcm import (
    ClusterTrace,
    FcmConfig,
    FuzzyState,
    VirtualClock,
    as_feature_matrix,
    hard_labels,
    init_membership,
    run_fcm,
)
from .imagery import (
    PALETTE8,
    ImageRecord,
    LabelMap,
    fingerprint_corpus,
    load_corpus_dir,
    load_feature_csv,
    load_image_features,
    read_label_image,
    write_feature_csv,
    write_label_image,
    write_points_csv,
    write_trace_csv,
)
from .lof import LofConfig, lof_scores, remove_outliers, removal_count
from .randindex import (
    PairCounts,
    accuracy_trace,
    pair_counts,
    rand_index_contingency,
    rand_index_pairwise,
)
from .svr import (
    LinearModel,
    SvrHyperparams,
    SvrModel,
    fit_linear,
    fit_svr,
    predict_linear,
    predict_svr,
    rbf_kernel,
)
from .workflows import (
    CalibrationOutcome,
    ClassificationOutcome,
    classify_record,
    cost_from_report,
    run_calibration,
    run_evaluation,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "EarlyFcmError",
    "ConfigurationError",
    "InputError",
    "NumericError",
    "DegenerateClusterError",
    "DegenerateFitError",
    "CalibrationError",
    "IngestionError",
    "ParseError",
    "SchemaError",
    "ModelVersionError",
    "OutputError",
    # clustering
    "FcmConfig",
    "FuzzyState",
    "ClusterTrace",
    "VirtualClock",
    "as_feature_matrix",
    "init_membership",
    "run_fcm",
    "hard_labels",
    # partition agreement
    "PairCounts",
    "pair_counts",
    "rand_index_pairwise",
    "rand_index_contingency",
    "accuracy_trace",
    # anomaly filtering
    "LofConfig",
    "lof_scores",
    "remove_outliers",
    "removal_count",
    # regression
    "SvrHyperparams",
    "SvrModel",
    "LinearModel",
    "rbf_kernel",
    "fit_svr",
    "predict_svr",
    "fit_linear",
    "predict_linear",
    # calibration
    "CalibrationPoint",
    "CalibrationModel",
    "Scaler",
    "DEFAULT_ACCURACY_GRID",
    "change_rate",
    "collect_calibration_points",
    "fit_threshold_model",
    "threshold_for",
    "save_model",
    "load_model",
    # early stopping and evaluation
    "EarlyStopResult",
    "EvaluationRecord",
    "AccuracySummary",
    "EvaluationReport",
    "classify_early_stop",
    "evaluate_early_stop",
    "evaluate_corpus",
    "report_document",
    "write_report_json",
    "load_report",
    "write_accuracy_table",
    "write_time_table",
    # cost
    "PriceSheet",
    "CostReport",
    "compute_cost",
    "total_time",
    "cost_effectiveness",
    "extrapolate_savings",
    "build_cost_report",
    "round_cents",
    "cost_report_document",
    "write_cost_report",
    "format_cost_report",
    # imagery and files
    "ImageRecord",
    "LabelMap",
    "PALETTE8",
    "load_image_features",
    "load_feature_csv",
    "write_feature_csv",
    "write_label_image",
    "read_label_image",
    "write_trace_csv",
    "write_points_csv",
    "fingerprint_corpus",
    "load_corpus_dir",
    # workflows
    "CalibrationOutcome",
    "ClassificationOutcome",
    "run_calibration",
    "classify_record",
    "run_evaluation",
    "cost_from_report",
]
