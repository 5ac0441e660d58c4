"""Training phase: harvest (accuracy, change-rate) points, filter, fit, tabulate.

The pipeline pools points from every training image into a single cloud,
standardizes (r, ln delta), strips LOF outliers, regresses ln delta on r with
SVR, and reads the regressor out at a grid of desired accuracies to produce a
monotone accuracy -> stop-threshold table. The fitted model round-trips
through a versioned JSON document exactly.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    CalibrationError,
    ConfigurationError,
    InputError,
    ModelVersionError,
    ParseError,
    SchemaError,
)
from .fcm import FcmConfig, Timer, run_fcm
from .lof import LofConfig, lof_scores, remove_outliers
from .randindex import accuracy_trace
from .svr import SvrHyperparams, SvrModel, fit_svr, predict_svr

log = logging.getLogger(__name__)

MODEL_VERSION = 1

# the five desired-accuracy levels used throughout evaluation
DEFAULT_ACCURACY_GRID = (0.85, 0.90, 0.95, 0.99, 0.999)


@dataclass(frozen=True)
class CalibrationPoint:
    """One (iteration, accuracy, change-rate) observation from a training image."""

    image_id: str
    iteration: int
    accuracy: float
    change_rate: float

    def __post_init__(self) -> None:
        if self.iteration < 2:
            raise InputError(f"iteration must be >= 2, got {self.iteration}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise InputError(f"accuracy must be in [0, 1], got {self.accuracy}")
        if not (math.isfinite(self.change_rate) and self.change_rate > 0):
            raise InputError(f"change_rate must be finite and > 0, got {self.change_rate}")


@dataclass(frozen=True)
class Scaler:
    """Per-dimension standardization constants for (accuracy, ln change_rate)."""

    means: np.ndarray
    stds: np.ndarray

    def transform(self, data: np.ndarray) -> np.ndarray:
        return (np.asarray(data, dtype=np.float64) - self.means) / self.stds


@dataclass(frozen=True)
class CalibrationModel:
    """Everything needed to turn a desired accuracy into a stop threshold.

    threshold_table holds (desired_accuracy, threshold) pairs sorted by
    accuracy, with thresholds non-increasing as accuracy grows.
    """

    scaler: Scaler
    regressor: SvrModel
    fcm_config: FcmConfig
    threshold_table: tuple[tuple[float, float], ...]
    corpus_fingerprint: str
    training_time_seconds: float


def change_rate(objectives: Sequence[float], m: int) -> float:
    """Relative decrease of the objective at iteration m (1-indexed, m >= 2).

    delta_m = (J_{m-1} - J_m) / J_{m-1}; 0 when the previous objective is
    already 0 (nothing left to decrease).
    """
    if not 2 <= m <= len(objectives):
        raise InputError(f"m must be in [2, {len(objectives)}], got {m}")
    prev, cur = objectives[m - 2], objectives[m - 1]
    if prev < 0:
        raise InputError(f"objective values must be >= 0, got J_{m-1} = {prev}")
    if prev == 0.0:
        return 0.0
    return (prev - cur) / prev


def _harvest_one(image_id: str, features, config: FcmConfig, timer: Timer | None):
    _, trace = run_fcm(features, config, timer=timer)
    accs = accuracy_trace(trace)
    points = []
    for m in range(2, trace.n_iterations + 1):
        delta = change_rate(trace.objectives, m)
        # zero or negative decreases carry no threshold information and
        # cannot be log-transformed
        if not (math.isfinite(delta) and delta > 0):
            continue
        points.append(CalibrationPoint(image_id, m, accs[m - 1], delta))
    return points, float(sum(trace.iter_times))


def collect_calibration_points(
    corpus: Iterable,
    config: FcmConfig,
    *,
    jobs: int = 1,
    timer_factory: Callable[[], Timer] | None = None,
) -> tuple[list[CalibrationPoint], float]:
    """Run FCM to convergence on every image and pool the harvested points.

    corpus items carry ``image_id`` and ``features`` attributes. Images whose
    clustering fails are skipped with a logged warning; only a fully failed
    corpus raises. Returns (points sorted by (image_id, iteration), training
    seconds). Training time is the wall-clock of the whole harvest, or the
    summed per-image iteration times when a timer_factory supplies synthetic
    clocks.
    """
    records = list(corpus)
    if not records:
        raise CalibrationError("training corpus is empty")
    started = time.perf_counter()

    def work(rec):
        timer = timer_factory() if timer_factory is not None else None
        return _harvest_one(rec.image_id, rec.features, config, timer)

    results: list[tuple[list[CalibrationPoint], float] | None] = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(work, rec) for rec in records]
            for rec, fut in zip(records, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    log.warning("skipping image %s: %s", rec.image_id, exc)
                    results.append(None)
    else:
        for rec in records:
            try:
                results.append(work(rec))
            except Exception as exc:
                log.warning("skipping image %s: %s", rec.image_id, exc)
                results.append(None)

    points: list[CalibrationPoint] = []
    clocked = 0.0
    for res in results:
        if res is None:
            continue
        image_points, image_seconds = res
        points.extend(image_points)
        clocked += image_seconds
    if not points:
        raise CalibrationError("clustering failed on every training image")
    points.sort(key=lambda p: (p.image_id, p.iteration))
    training_seconds = clocked if timer_factory is not None else time.perf_counter() - started
    return points, training_seconds


def _fit_scaler(data: np.ndarray) -> Scaler:
    means = data.mean(axis=0)
    stds = data.std(axis=0)
    # constant columns can report std ~1e-16 from summation noise
    if (stds <= 1e-12 * (1.0 + np.abs(means))).any():
        raise CalibrationError(
            "calibration points have zero variance in accuracy or log change rate"
        )
    return Scaler(means=means, stds=stds)


def _threshold_from_regressor(model: SvrModel, scaler: Scaler, accuracy: float) -> float:
    r_std = (accuracy - scaler.means[0]) / scaler.stds[0]
    ln_delta_std = predict_svr(model, r_std)
    return float(np.exp(scaler.means[1] + scaler.stds[1] * ln_delta_std))


def fit_threshold_model(
    points: Sequence[CalibrationPoint],
    lof: LofConfig | None = None,
    svr: SvrHyperparams | None = None,
    accuracy_grid: Sequence[float] = DEFAULT_ACCURACY_GRID,
    *,
    fcm_config: FcmConfig,
    corpus_fingerprint: str = "",
    training_time_seconds: float = 0.0,
) -> CalibrationModel:
    """Filter anomalies, regress ln(change rate) on accuracy, tabulate thresholds.

    The table is clipped from the top accuracy downward so thresholds are
    non-increasing in desired accuracy; an RBF regressor is not monotone on
    its own, and a non-monotone stop table would be meaningless.
    """
    lof = lof or LofConfig()
    svr = svr or SvrHyperparams()
    grid = sorted(float(a) for a in accuracy_grid)
    if not grid:
        raise CalibrationError("accuracy grid is empty")
    if grid[0] <= 0.0 or grid[-1] >= 1.0:
        raise CalibrationError(f"grid accuracies must lie in (0, 1), got {grid}")
    if len(points) < lof.n_neighbors + 1:
        raise CalibrationError(
            f"need more than {lof.n_neighbors} calibration points, got {len(points)}"
        )
    data = np.array([[p.accuracy, math.log(p.change_rate)] for p in points])
    scaler = _fit_scaler(data)
    standardized = scaler.transform(data)
    scores = lof_scores(standardized, lof.n_neighbors)
    survivors, _ = remove_outliers(standardized, scores, lof.outliers_fraction)
    regressor = fit_svr(survivors[:, 0], survivors[:, 1], svr)
    regressor.scaler = scaler
    if not regressor.converged:
        log.warning(
            "SVR did not reach its KKT tolerance within %d passes; "
            "thresholds come from the best iterate",
            svr.max_passes,
        )
    thresholds = [_threshold_from_regressor(regressor, scaler, a) for a in grid]
    for i in range(len(thresholds) - 2, -1, -1):
        thresholds[i] = max(thresholds[i], thresholds[i + 1])
    return CalibrationModel(
        scaler=scaler,
        regressor=regressor,
        fcm_config=fcm_config,
        threshold_table=tuple(zip(grid, thresholds)),
        corpus_fingerprint=corpus_fingerprint,
        training_time_seconds=training_time_seconds,
    )


def threshold_for(model: CalibrationModel, desired_accuracy: float) -> float:
    """Stop threshold for a desired accuracy.

    Exact table entries are returned verbatim; anything else is read from the
    regressor and clipped between the neighboring table entries so the
    monotone ordering of the table extends to off-grid queries.
    """
    a = float(desired_accuracy)
    if not 0.0 < a < 1.0:
        raise InputError(f"desired accuracy must be in (0, 1), got {desired_accuracy}")
    for acc, thr in model.threshold_table:
        if acc == a:
            return thr
    value = _threshold_from_regressor(model.regressor, model.scaler, a)
    below = [thr for acc, thr in model.threshold_table if acc < a]
    above = [thr for acc, thr in model.threshold_table if acc > a]
    if below:
        value = min(value, min(below))
    if above:
        value = max(value, max(above))
    return value


# persistence ----------------------------------------------------------------

def _model_document(model: CalibrationModel) -> dict:
    cfg = model.fcm_config
    return {
        "version": MODEL_VERSION,
        "scaler": {
            "means": model.scaler.means.tolist(),
            "stds": model.scaler.stds.tolist(),
        },
        "svr": {
            "gamma": model.regressor.gamma,
            "bias": model.regressor.bias,
            "support_inputs": model.regressor.support_inputs.tolist(),
            "dual_coeffs": model.regressor.dual_coeffs.tolist(),
            "converged": model.regressor.converged,
        },
        "fcm_config": {
            "n_clusters": cfg.n_clusters,
            "fuzzifier": cfg.fuzzifier,
            "epsilon": cfg.epsilon,
            "max_iterations": cfg.max_iterations,
            "seed": cfg.seed,
        },
        "threshold_table": [[acc, thr] for acc, thr in model.threshold_table],
        "corpus_fingerprint": model.corpus_fingerprint,
        "training_time_seconds": model.training_time_seconds,
    }


def save_model(model: CalibrationModel, path) -> None:
    """Write the model as a versioned JSON document (stable key order)."""
    doc = _model_document(model)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _field(doc: dict, path: str):
    node = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise SchemaError(f"model document is missing field '{path}'")
        node = node[part]
    return node


def load_model(path) -> CalibrationModel:
    """Read a model document back; numeric fields round-trip exactly."""
    try:
        text = Path(path).read_text()
    except (FileNotFoundError, OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read model file '{path}': {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("model document must be a JSON object")
    version = _field(doc, "version")
    if version != MODEL_VERSION:
        raise ModelVersionError(
            f"model version {version!r} is not supported (expected {MODEL_VERSION})"
        )
    means = np.asarray(_field(doc, "scaler.means"), dtype=np.float64)
    stds = np.asarray(_field(doc, "scaler.stds"), dtype=np.float64)
    if means.shape != (2,) or stds.shape != (2,):
        raise SchemaError("fields 'scaler.means' and 'scaler.stds' must have length 2")
    if (stds <= 0).any():
        raise SchemaError("field 'scaler.stds' must be strictly positive")
    scaler = Scaler(means=means, stds=stds)

    support = np.asarray(_field(doc, "svr.support_inputs"), dtype=np.float64)
    coeffs = np.asarray(_field(doc, "svr.dual_coeffs"), dtype=np.float64)
    if support.size == 0:
        support = support.reshape(0, 1)
    if support.ndim != 2 or coeffs.ndim != 1 or support.shape[0] != coeffs.shape[0]:
        raise SchemaError(
            "fields 'svr.support_inputs' and 'svr.dual_coeffs' must align"
        )
    regressor = SvrModel(
        support_inputs=support,
        dual_coeffs=coeffs,
        bias=float(_field(doc, "svr.bias")),
        gamma=float(_field(doc, "svr.gamma")),
        converged=bool(_field(doc, "svr.converged")),
        scaler=scaler,
    )

    raw_cfg = _field(doc, "fcm_config")
    if not isinstance(raw_cfg, dict):
        raise SchemaError("field 'fcm_config' must be an object")
    try:
        fcm_config = FcmConfig(
            n_clusters=int(_field(doc, "fcm_config.n_clusters")),
            fuzzifier=float(_field(doc, "fcm_config.fuzzifier")),
            epsilon=float(_field(doc, "fcm_config.epsilon")),
            max_iterations=int(_field(doc, "fcm_config.max_iterations")),
            seed=int(_field(doc, "fcm_config.seed")),
        )
    except ConfigurationError as exc:
        raise SchemaError(f"field 'fcm_config' is invalid: {exc}") from exc

    raw_table = _field(doc, "threshold_table")
    if not isinstance(raw_table, list) or not raw_table:
        raise SchemaError("field 'threshold_table' must be a non-empty list")
    table: list[tuple[float, float]] = []
    for i, entry in enumerate(raw_table):
        if not (isinstance(entry, list) and len(entry) == 2):
            raise SchemaError(f"field 'threshold_table[{i}]' must be an [accuracy, threshold] pair")
        acc, thr = float(entry[0]), float(entry[1])
        if not 0.0 < acc < 1.0 or not thr > 0.0:
            raise SchemaError(f"field 'threshold_table[{i}]' is out of range")
        table.append((acc, thr))
    for (a_lo, t_lo), (a_hi, t_hi) in zip(table, table[1:]):
        if a_hi <= a_lo:
            raise SchemaError("field 'threshold_table' accuracies must be increasing")
        if t_hi > t_lo:
            raise SchemaError("field 'threshold_table' thresholds must be non-increasing")

    return CalibrationModel(
        scaler=scaler,
        regressor=regressor,
        fcm_config=fcm_config,
        threshold_table=tuple(table),
        corpus_fingerprint=str(_field(doc, "corpus_fingerprint")),
        training_time_seconds=float(_field(doc, "training_time_seconds")),
    )
