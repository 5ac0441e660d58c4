"""End-to-end orchestration shared by the CLI and the HTTP service.

Each workflow composes the core modules (clustering, calibration, early
stopping, cost) around loaded corpus records, so both entry points run the
exact same code path and stay byte-for-byte reproducible under a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .calibration import (
    CalibrationModel,
    CalibrationPoint,
    collect_calibration_points,
    fit_threshold_model,
    threshold_for,
)
from .cost import CostReport, PriceSheet, build_cost_report
from .earlystop import EarlyStopResult, EvaluationReport, classify_early_stop, evaluate_corpus
from .errors import ConfigurationError, InputError
from .fcm import FcmConfig, Timer, as_feature_matrix
from .imagery import ImageRecord, LabelMap, fingerprint_corpus
from .lof import LofConfig, removal_count
from .svr import SvrHyperparams

__all__ = [
    "CalibrationOutcome",
    "ClassificationOutcome",
    "run_calibration",
    "classify_record",
    "run_evaluation",
    "cost_from_report",
]


@dataclass(frozen=True)
class CalibrationOutcome:
    """A fitted threshold model plus the harvest statistics worth reporting."""

    model: CalibrationModel
    points: tuple[CalibrationPoint, ...]
    n_images: int
    n_points: int
    n_outliers_removed: int


@dataclass(frozen=True)
class ClassificationOutcome:
    """One image classified with early stopping, ready for label export."""

    image_id: str
    label_map: LabelMap
    result: EarlyStopResult
    threshold: float
    exact_table_hit: bool


def run_calibration(
    records: Sequence[ImageRecord],
    *,
    fcm_config: FcmConfig | None = None,
    lof_config: LofConfig | None = None,
    svr_params: SvrHyperparams | None = None,
    accuracy_grid: Sequence[float] | None = None,
    jobs: int = 1,
    timer_factory: Callable[[], Timer] | None = None,
) -> CalibrationOutcome:
    """Harvest (accuracy, change-rate) points from a corpus and fit thresholds."""
    records = list(records)
    if not records:
        raise InputError("calibration corpus is empty")
    config = fcm_config or FcmConfig()
    lof = lof_config or LofConfig()
    fingerprint = fingerprint_corpus(records)
    points, seconds = collect_calibration_points(
        records, config, jobs=jobs, timer_factory=timer_factory
    )
    kwargs = {} if accuracy_grid is None else {"accuracy_grid": accuracy_grid}
    model = fit_threshold_model(
        points,
        lof,
        svr_params,
        fcm_config=config,
        corpus_fingerprint=fingerprint,
        training_time_seconds=seconds,
        **kwargs,
    )
    return CalibrationOutcome(
        model=model,
        points=tuple(points),
        n_images=len(records),
        n_points=len(points),
        n_outliers_removed=removal_count(len(points), lof.outliers_fraction),
    )


def _resolve_config(model: CalibrationModel, config: FcmConfig | None) -> FcmConfig:
    if config is None:
        return model.fcm_config
    if config.n_clusters != model.fcm_config.n_clusters:
        raise ConfigurationError(
            f"model was calibrated for {model.fcm_config.n_clusters} clusters, "
            f"requested {config.n_clusters}"
        )
    return config


def classify_record(
    record: ImageRecord,
    model: CalibrationModel,
    desired_accuracy: float,
    *,
    config: FcmConfig | None = None,
    timer: Timer | None = None,
) -> ClassificationOutcome:
    """Cluster one image, stopping at the model's threshold for the accuracy."""
    cfg = _resolve_config(model, config)
    threshold = threshold_for(model, desired_accuracy)
    exact = any(a == float(desired_accuracy) for a, _ in model.threshold_table)
    result = classify_early_stop(
        as_feature_matrix(record.features), cfg, threshold, timer=timer
    )
    label_map = LabelMap(width=record.width, height=record.height, labels=result.labels)
    return ClassificationOutcome(
        image_id=record.image_id,
        label_map=label_map,
        result=result,
        threshold=threshold,
        exact_table_hit=exact,
    )


def run_evaluation(
    records: Sequence[ImageRecord],
    model: CalibrationModel,
    accuracies: Sequence[float] | None = None,
    *,
    config: FcmConfig | None = None,
    jobs: int = 1,
    timer_factory: Callable[[], Timer] | None = None,
) -> EvaluationReport:
    """Measure achieved accuracy and time fraction per desired-accuracy level."""
    return evaluate_corpus(
        records,
        model,
        accuracies,
        config=config,
        jobs=jobs,
        timer_factory=timer_factory,
    )


def cost_from_report(
    report: EvaluationReport,
    price: PriceSheet,
    *,
    training_hours: float = 0.0,
    desired_accuracy: float | None = None,
) -> list[tuple[float, CostReport]]:
    """Turn an evaluation report into dollar figures, one per accuracy level.

    Per level: actual hours are the early-stopped portion of each run
    (time_fraction x full elapsed), saved hours are the remainder.  Training
    hours are amortized into the actual side of every level's report.
    """
    levels = sorted({r.desired_accuracy for r in report.records})
    if desired_accuracy is not None:
        if float(desired_accuracy) not in levels:
            raise InputError(
                f"accuracy {desired_accuracy} not present in the report "
                f"(levels: {levels})"
            )
        levels = [float(desired_accuracy)]
    out: list[tuple[float, CostReport]] = []
    for level in levels:
        rows = [r for r in report.records if r.desired_accuracy == level]
        full_hours = sum(r.total_elapsed_seconds for r in rows) / 3600.0
        actual_hours = sum(
            r.time_fraction * r.total_elapsed_seconds for r in rows
        ) / 3600.0
        saved_hours = max(full_hours - actual_hours, 0.0)
        out.append(
            (level, build_cost_report(price, training_hours, actual_hours, saved_hours))
        )
    return out
