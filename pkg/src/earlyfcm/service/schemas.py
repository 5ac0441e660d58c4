"""Request/response bodies for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class FcmConfigBody(BaseModel):
    n_clusters: int = 6
    fuzzifier: float = 2.0
    epsilon: float = 0.005
    max_iterations: int = 300
    seed: int = 0


class LofConfigBody(BaseModel):
    n_neighbors: int = 40
    outliers_fraction: float = 0.03


class SvrParamsBody(BaseModel):
    c: float = 1.0
    epsilon_tube: float = 0.01
    gamma: float | Literal["scale"] = "scale"
    tolerance: float = 1e-3
    max_passes: int = 200


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str
    model_loaded: bool


class ThresholdEntry(BaseModel):
    accuracy: float
    threshold: float


class ModelInfoResponse(BaseModel):
    loaded: bool
    model_path: str | None = None
    fcm_config: FcmConfigBody | None = None
    threshold_table: list[ThresholdEntry] | None = None
    corpus_fingerprint: str | None = None
    training_time_seconds: float | None = None


class LoadModelRequest(BaseModel):
    path: str


class CalibrateRequest(BaseModel):
    input_dir: str = Field(description="server-local directory of PNG/PPM/CSV inputs")
    accuracies: list[float] | None = None
    fcm: FcmConfigBody = FcmConfigBody()
    lof: LofConfigBody = LofConfigBody()
    svr: SvrParamsBody = SvrParamsBody()
    header: bool = False
    jobs: int = 1
    timer: Literal["wall", "virtual"] = "wall"
    model_out: str | None = Field(
        default=None, description="optional server-local path to persist the model"
    )


class CalibrateResponse(BaseModel):
    n_images: int
    n_points: int
    n_outliers_removed: int
    threshold_table: list[ThresholdEntry]
    corpus_fingerprint: str
    training_time_seconds: float
    model_path: str | None = None


class ThresholdRequest(BaseModel):
    desired_accuracy: float


class ThresholdResponse(BaseModel):
    desired_accuracy: float
    threshold: float
    exact_table_hit: bool


class ClassifyRequest(BaseModel):
    image_path: str = Field(description="server-local PNG or PPM image")
    desired_accuracy: float
    out_path: str | None = Field(
        default=None, description="optional server-local label PNG to write"
    )
    seed: int | None = None
    timer: Literal["wall", "virtual"] = "wall"
    return_labels: bool = False


class ClassifyResponse(BaseModel):
    image_id: str
    width: int
    height: int
    stop_iteration: int
    elapsed_seconds: float
    stopped_early: bool
    threshold: float
    exact_table_hit: bool
    labels_path: str | None = None
    labels: list[int] | None = None


class EvaluateRequest(BaseModel):
    input_dir: str
    accuracies: list[float] | None = None
    header: bool = False
    jobs: int = 1
    timer: Literal["wall", "virtual"] = "wall"
    report_out: str | None = None


class CostRequest(BaseModel):
    unit_price: float
    report_path: str | None = None
    desired_accuracy: float | None = None
    training_hours: float = 0.0
    actual_hours: float | None = None
    saved_hours: float | None = None
    area_km2: float | None = None
    image_area_m2: float | None = None
    saved_hours_per_image: float | None = None
