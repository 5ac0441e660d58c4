"""Testing phase: stop clustering when the change rate crosses a threshold.

classify_early_stop actually cuts the run short; evaluate_early_stop runs to
full convergence once and reads both the stop point and the final partition
out of the same trace, so accuracy and time fractions are measured without
re-running anything.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .calibration import CalibrationModel, change_rate, threshold_for
from .errors import ConfigurationError, InputError, ParseError
from .fcm import ClusterTrace, FcmConfig, Timer, run_fcm
from .randindex import rand_index_contingency

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EarlyStopResult:
    """Outcome of one threshold-stopped clustering run."""

    labels: np.ndarray
    stop_iteration: int
    objectives: tuple[float, ...]
    elapsed_seconds: float
    stopped_early: bool


@dataclass(frozen=True)
class EvaluationRecord:
    """One (image, desired accuracy) measurement from a full-convergence run.

    total_elapsed_seconds is the full run's clock time; together with
    time_fraction it lets cost reporting recover absolute stopped time.
    """

    image_id: str
    desired_accuracy: float
    achieved_accuracy: float
    time_fraction: float
    stop_iteration: int
    total_iterations: int
    total_elapsed_seconds: float


@dataclass(frozen=True)
class AccuracySummary:
    """Aggregate over all images at one desired accuracy level."""

    desired_accuracy: float
    mean_achieved: float
    std_achieved: float
    mean_time_fraction: float


@dataclass(frozen=True)
class EvaluationReport:
    summaries: tuple[AccuracySummary, ...]
    records: tuple[EvaluationRecord, ...]


def _check_threshold(threshold: float) -> float:
    t = float(threshold)
    if not (math.isfinite(t) and t >= 0.0):
        raise InputError(f"threshold must be finite and >= 0, got {threshold}")
    return t


def classify_early_stop(
    features, config: FcmConfig, threshold: float, timer: Timer | None = None
) -> EarlyStopResult:
    """Cluster, stopping at the first iteration whose change rate drops
    below the threshold (strict; ties keep running).

    The check starts at iteration 2, where the change rate is first defined.
    A threshold of 0 never fires, so the run ends by ordinary convergence
    with stopped_early False.
    """
    t = _check_threshold(threshold)
    fired = False

    def predicate(trace: ClusterTrace) -> bool:
        nonlocal fired
        if change_rate(trace.objectives, trace.n_iterations) < t:
            fired = True
        return fired

    state, trace = run_fcm(features, config, stop_predicate=predicate, timer=timer)
    return EarlyStopResult(
        labels=trace.labels[-1],
        stop_iteration=trace.n_iterations,
        objectives=tuple(trace.objectives),
        elapsed_seconds=float(sum(trace.iter_times)),
        stopped_early=fired,
    )


def _stop_iteration(objectives: Sequence[float], threshold: float) -> int:
    n = len(objectives)
    for m in range(2, n + 1):
        if change_rate(objectives, m) < threshold:
            return m
    return n


def evaluate_early_stop(
    features,
    config: FcmConfig,
    threshold: float,
    desired_accuracy: float,
    *,
    image_id: str = "",
    timer: Timer | None = None,
) -> EvaluationRecord:
    """Measure what stopping at the threshold would have cost in accuracy.

    Runs to full convergence once; the stop iteration s is located in the
    recorded trace, achieved accuracy is Rand(L_s, L_n), and time fraction is
    the clock time of iterations 1..s over the whole run's.
    """
    t = _check_threshold(threshold)
    if not 0.0 < desired_accuracy < 1.0:
        raise InputError(f"desired accuracy must be in (0, 1), got {desired_accuracy}")
    _, trace = run_fcm(features, config, timer=timer)
    return _record_from_trace(trace, t, desired_accuracy, image_id)


def _record_from_trace(
    trace: ClusterTrace, threshold: float, desired_accuracy: float, image_id: str
) -> EvaluationRecord:
    n = trace.n_iterations
    s = _stop_iteration(trace.objectives, threshold)
    if s == n:
        achieved = 1.0
        fraction = 1.0
    else:
        achieved = rand_index_contingency(trace.labels[s - 1], trace.labels[-1])
        total = float(sum(trace.iter_times))
        fraction = float(sum(trace.iter_times[:s])) / total
    return EvaluationRecord(
        image_id=image_id,
        desired_accuracy=desired_accuracy,
        achieved_accuracy=achieved,
        time_fraction=fraction,
        stop_iteration=s,
        total_iterations=n,
        total_elapsed_seconds=float(sum(trace.iter_times)),
    )


def evaluate_corpus(
    corpus: Iterable,
    model: CalibrationModel,
    accuracies: Sequence[float] | None = None,
    *,
    config: FcmConfig | None = None,
    jobs: int = 1,
    timer_factory: Callable[[], Timer] | None = None,
) -> EvaluationReport:
    """Evaluate every image at every desired accuracy and aggregate.

    Each image is clustered exactly once with the model's FCM configuration;
    all accuracy levels are read from that single trace. A config override
    must agree with the model on n_clusters, otherwise the calibrated
    thresholds would describe a different clustering problem entirely.
    """
    if accuracies is None:
        accuracies = [acc for acc, _ in model.threshold_table]
    levels = [float(a) for a in accuracies]
    if not levels:
        raise InputError("need at least one desired accuracy")
    for a in levels:
        if not 0.0 < a < 1.0:
            raise InputError(f"desired accuracy must be in (0, 1), got {a}")
    if config is None:
        config = model.fcm_config
    elif config.n_clusters != model.fcm_config.n_clusters:
        raise ConfigurationError(
            f"corpus config has n_clusters={config.n_clusters} but the model "
            f"was calibrated with n_clusters={model.fcm_config.n_clusters}"
        )
    records_list = list(corpus)
    if not records_list:
        raise InputError("evaluation corpus is empty")
    thresholds = [threshold_for(model, a) for a in levels]

    def work(rec) -> list[EvaluationRecord]:
        timer = timer_factory() if timer_factory is not None else None
        _, trace = run_fcm(rec.features, config, timer=timer)
        return [
            _record_from_trace(trace, t, a, rec.image_id)
            for a, t in zip(levels, thresholds)
        ]

    per_image: list[list[EvaluationRecord]] = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_image = list(pool.map(work, records_list))
    else:
        per_image = [work(rec) for rec in records_list]

    flat = [rec for image_records in per_image for rec in image_records]
    flat.sort(key=lambda r: (r.desired_accuracy, r.image_id))
    summaries = []
    for a in sorted(levels):
        level_records = [r for r in flat if r.desired_accuracy == a]
        achieved = np.array([r.achieved_accuracy for r in level_records])
        fractions = np.array([r.time_fraction for r in level_records])
        summaries.append(
            AccuracySummary(
                desired_accuracy=a,
                mean_achieved=float(achieved.mean()),
                std_achieved=float(achieved.std()),
                mean_time_fraction=float(fractions.mean()),
            )
        )
    return EvaluationReport(summaries=tuple(summaries), records=tuple(flat))


# serialization ---------------------------------------------------------------

def report_document(report: EvaluationReport) -> dict:
    return {
        "summaries": [
            {
                "desired_accuracy": s.desired_accuracy,
                "mean_achieved": s.mean_achieved,
                "std_achieved": s.std_achieved,
                "mean_time_fraction": s.mean_time_fraction,
            }
            for s in report.summaries
        ],
        "records": [
            {
                "image_id": r.image_id,
                "desired_accuracy": r.desired_accuracy,
                "achieved_accuracy": r.achieved_accuracy,
                "time_fraction": r.time_fraction,
                "stop_iteration": r.stop_iteration,
                "total_iterations": r.total_iterations,
                "total_elapsed_seconds": r.total_elapsed_seconds,
            }
            for r in report.records
        ],
    }


def write_report_json(report: EvaluationReport, path) -> None:
    Path(path).write_text(json.dumps(report_document(report), indent=2, sort_keys=True) + "\n")


def load_report(path) -> EvaluationReport:
    try:
        text = Path(path).read_text()
    except (FileNotFoundError, OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read report file '{path}': {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"report file is not valid JSON: {exc}") from exc
    summaries = tuple(
        AccuracySummary(
            desired_accuracy=float(s["desired_accuracy"]),
            mean_achieved=float(s["mean_achieved"]),
            std_achieved=float(s["std_achieved"]),
            mean_time_fraction=float(s["mean_time_fraction"]),
        )
        for s in doc["summaries"]
    )
    records = tuple(
        EvaluationRecord(
            image_id=str(r["image_id"]),
            desired_accuracy=float(r["desired_accuracy"]),
            achieved_accuracy=float(r["achieved_accuracy"]),
            time_fraction=float(r["time_fraction"]),
            stop_iteration=int(r["stop_iteration"]),
            total_iterations=int(r["total_iterations"]),
            total_elapsed_seconds=float(r["total_elapsed_seconds"]),
        )
        for r in doc["records"]
    )
    return EvaluationReport(summaries=summaries, records=records)


def write_accuracy_table(report: EvaluationReport, path) -> None:
    """CSV of achieved accuracy per desired level: accuracy,mean_achieved,std_achieved."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["accuracy", "mean_achieved", "std_achieved"])
        for s in report.summaries:
            writer.writerow([repr(s.desired_accuracy), repr(s.mean_achieved), repr(s.std_achieved)])


def write_time_table(report: EvaluationReport, path) -> None:
    """CSV of time fraction per desired level: accuracy,mean_time_fraction."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["accuracy", "mean_time_fraction"])
        for s in report.summaries:
            writer.writerow([repr(s.desired_accuracy), repr(s.mean_time_fraction)])
