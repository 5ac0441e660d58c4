"""HTTP service exposing calibration, classification, evaluation, and cost.

The service wraps the same workflow layer as the CLI.  File-path fields in
request bodies refer to server-local paths: the service is a single-host
front end for the package, not a file-upload gateway.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..calibration import CalibrationModel, load_model, save_model, threshold_for
from ..cost import (
    PriceSheet,
    build_cost_report,
    cost_report_document,
    extrapolate_savings,
    round_cents,
)
from ..earlystop import load_report, report_document, write_report_json
from ..errors import (
    ConfigurationError,
    EarlyFcmError,
    IngestionError,
    InputError,
    ParseError,
    SchemaError,
)
from ..fcm import FcmConfig, VirtualClock
from ..imagery import load_corpus_dir, load_image_features, write_label_image
from ..lof import LofConfig
from ..svr import SvrHyperparams
from ..workflows import classify_record, cost_from_report, run_calibration, run_evaluation
from . import schemas

_USAGE_ERRORS = (ConfigurationError, InputError, ParseError, SchemaError, IngestionError)


def _timer_factory(name: str):
    return VirtualClock if name == "virtual" else None


def _fcm_config(body: schemas.FcmConfigBody) -> FcmConfig:
    return FcmConfig(
        n_clusters=body.n_clusters,
        fuzzifier=body.fuzzifier,
        epsilon=body.epsilon,
        max_iterations=body.max_iterations,
        seed=body.seed,
    )


def _table(model: CalibrationModel) -> list[schemas.ThresholdEntry]:
    return [
        schemas.ThresholdEntry(accuracy=a, threshold=t) for a, t in model.threshold_table
    ]


def create_app(model_path: str | None = None) -> FastAPI:
    """Build the service, optionally preloading a calibration model."""
    app = FastAPI(title="earlyfcm", version=__version__)
    state: dict = {"model": None, "model_path": None}
    if model_path:
        state["model"] = load_model(model_path)
        state["model_path"] = str(model_path)

    def require_model() -> CalibrationModel:
        model = state["model"]
        if model is None:
            raise InputError("no model loaded: POST /model/load or /calibrate first")
        return model

    @app.exception_handler(EarlyFcmError)
    async def _domain_error(request: Request, exc: EarlyFcmError) -> JSONResponse:
        status = 400 if isinstance(exc, _USAGE_ERRORS) else 500
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(
            status="ok", version=__version__, model_loaded=state["model"] is not None
        )

    @app.get("/model", response_model=schemas.ModelInfoResponse)
    def model_info() -> schemas.ModelInfoResponse:
        model = state["model"]
        if model is None:
            return schemas.ModelInfoResponse(loaded=False)
        cfg = model.fcm_config
        return schemas.ModelInfoResponse(
            loaded=True,
            model_path=state["model_path"],
            fcm_config=schemas.FcmConfigBody(
                n_clusters=cfg.n_clusters,
                fuzzifier=cfg.fuzzifier,
                epsilon=cfg.epsilon,
                max_iterations=cfg.max_iterations,
                seed=cfg.seed,
            ),
            threshold_table=_table(model),
            corpus_fingerprint=model.corpus_fingerprint,
            training_time_seconds=model.training_time_seconds,
        )

    @app.post("/model/load", response_model=schemas.ModelInfoResponse)
    def model_load(body: schemas.LoadModelRequest) -> schemas.ModelInfoResponse:
        state["model"] = load_model(body.path)
        state["model_path"] = body.path
        return model_info()

    @app.post("/threshold", response_model=schemas.ThresholdResponse)
    def threshold(body: schemas.ThresholdRequest) -> schemas.ThresholdResponse:
        model = require_model()
        value = threshold_for(model, body.desired_accuracy)
        exact = any(a == body.desired_accuracy for a, _ in model.threshold_table)
        return schemas.ThresholdResponse(
            desired_accuracy=body.desired_accuracy, threshold=value, exact_table_hit=exact
        )

    @app.post("/calibrate", response_model=schemas.CalibrateResponse)
    def calibrate(body: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
        records = load_corpus_dir(body.input_dir, header=body.header)
        outcome = run_calibration(
            records,
            fcm_config=_fcm_config(body.fcm),
            lof_config=LofConfig(
                n_neighbors=body.lof.n_neighbors,
                outliers_fraction=body.lof.outliers_fraction,
            ),
            svr_params=SvrHyperparams(
                c=body.svr.c,
                epsilon_tube=body.svr.epsilon_tube,
                gamma=body.svr.gamma,
                tolerance=body.svr.tolerance,
                max_passes=body.svr.max_passes,
            ),
            accuracy_grid=body.accuracies,
            jobs=body.jobs,
            timer_factory=_timer_factory(body.timer),
        )
        state["model"] = outcome.model
        state["model_path"] = None
        if body.model_out:
            save_model(outcome.model, body.model_out)
            state["model_path"] = body.model_out
        return schemas.CalibrateResponse(
            n_images=outcome.n_images,
            n_points=outcome.n_points,
            n_outliers_removed=outcome.n_outliers_removed,
            threshold_table=_table(outcome.model),
            corpus_fingerprint=outcome.model.corpus_fingerprint,
            training_time_seconds=outcome.model.training_time_seconds,
            model_path=state["model_path"],
        )

    @app.post("/classify", response_model=schemas.ClassifyResponse)
    def classify(body: schemas.ClassifyRequest) -> schemas.ClassifyResponse:
        model = require_model()
        record = load_image_features(body.image_path)
        config = None
        if body.seed is not None:
            import dataclasses

            config = dataclasses.replace(model.fcm_config, seed=body.seed)
        timer_factory = _timer_factory(body.timer)
        outcome = classify_record(
            record,
            model,
            body.desired_accuracy,
            config=config,
            timer=timer_factory() if timer_factory else None,
        )
        labels_path = None
        if body.out_path:
            write_label_image(outcome.label_map, body.out_path)
            labels_path = body.out_path
        return schemas.ClassifyResponse(
            image_id=outcome.image_id,
            width=record.width,
            height=record.height,
            stop_iteration=outcome.result.stop_iteration,
            elapsed_seconds=outcome.result.elapsed_seconds,
            stopped_early=outcome.result.stopped_early,
            threshold=outcome.threshold,
            exact_table_hit=outcome.exact_table_hit,
            labels_path=labels_path,
            labels=outcome.label_map.labels.tolist() if body.return_labels else None,
        )

    @app.post("/evaluate")
    def evaluate(body: schemas.EvaluateRequest) -> dict:
        model = require_model()
        records = load_corpus_dir(body.input_dir, header=body.header)
        report = run_evaluation(
            records,
            model,
            body.accuracies,
            jobs=body.jobs,
            timer_factory=_timer_factory(body.timer),
        )
        if body.report_out:
            write_report_json(report, body.report_out)
        document = report_document(report)
        document["report_path"] = body.report_out
        return document

    @app.post("/cost")
    def cost(body: schemas.CostRequest) -> dict:
        price = PriceSheet(unit_price=body.unit_price)
        extrapolation = (body.area_km2, body.image_area_m2, body.saved_hours_per_image)
        have_extrapolation = all(v is not None for v in extrapolation)
        if any(v is not None for v in extrapolation) and not have_extrapolation:
            raise InputError(
                "extrapolation needs all of area_km2, image_area_m2 "
                "and saved_hours_per_image"
            )
        have_hours = body.actual_hours is not None and body.saved_hours is not None
        if not (body.report_path or have_hours or have_extrapolation):
            raise InputError(
                "nothing to price: pass report_path, actual_hours/saved_hours, "
                "or the extrapolation fields"
            )
        document: dict = {
            "currency": price.currency,
            "unit_price": repr(float(price.unit_price)),
        }
        if body.report_path:
            report = load_report(body.report_path)
            rows = cost_from_report(
                report,
                price,
                training_hours=body.training_hours,
                desired_accuracy=body.desired_accuracy,
            )
            document["levels"] = [
                {"desired_accuracy": level, **cost_report_document(cost_report)}
                for level, cost_report in rows
            ]
        elif have_hours:
            cost_report = build_cost_report(
                price, body.training_hours, body.actual_hours, body.saved_hours
            )
            document["explicit"] = cost_report_document(cost_report)
        if have_extrapolation:
            count, saved_hours, dollars = extrapolate_savings(
                body.area_km2, body.image_area_m2, body.saved_hours_per_image, price
            )
            document["extrapolation"] = {
                "image_count": count,
                "saved_hours": repr(saved_hours),
                "dollars_saved": str(round_cents(dollars)),
            }
        return document

    return app
