"""Request/response models for the probing service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, model_validator


class HealthResponse(BaseModel):
    status: str
    version: str


class ConfigRef(BaseModel):
    """A config either by server-local path or inline (paths relative to the
    server working directory)."""

    config_path: str | None = None
    config: dict | None = None
    seed: int | None = None
    out_dir: str | None = None

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.config_path is None) == (self.config is None):
            raise ValueError("provide exactly one of config_path or config")
        return self


class GenerateRequest(ConfigRef):
    tasks: list[str] | None = None
    languages: list[str] | None = None


class DatasetInfo(BaseModel):
    language: str
    task: str
    path: str
    meta_path: str
    size: int
    balance: str
    labels: list[str]


class GenerateResponse(BaseModel):
    datasets: list[DatasetInfo]


class EncodeRequest(ConfigRef):
    tasks: list[str] | None = None
    languages: list[str] | None = None
    encoders: list[str] | None = None


class EmbeddingInfo(BaseModel):
    language: str
    task: str
    encoder: str
    path: str
    rows: int
    dim: int


class EncodeResponse(BaseModel):
    files: list[EmbeddingInfo]


class MatrixRequest(ConfigRef):
    only: Literal["all", "probing", "downstream"] = "all"
    resume: bool = False
    jobs: int = 1


class JobSubmitted(BaseModel):
    job_id: str


class JobInfo(BaseModel):
    job_id: str
    status: Literal["pending", "running", "done", "failed"]
    total_cells: int | None = None
    completed_cells: int | None = None
    failures: list = []
    error: str | None = None
    results_csv: str | None = None
    out_dir: str | None = None


class MuRow(BaseModel):
    classifier: str
    size: int
    mu: float


class MinAvg(BaseModel):
    min: float
    avg: float


class CrossClassifierRow(BaseModel):
    classifier_a: str
    classifier_b: str
    min: float
    avg: float


class StabilitySummary(BaseModel):
    language: str
    sizes: list[int]
    classifiers: list[str]
    mu_table: list[MuRow]
    size_stability: dict[str, list[float]]
    cross_size_minavg: dict[str, MinAvg]
    cross_classifier: list[CrossClassifierRow]
    best_ranking_per_task: dict[str, list[str]]


class AnalyzeRequest(BaseModel):
    results_csv: str
    method: Literal["pearson", "spearman"] = "pearson"
    languages: list[str] | None = None
    probing_sizes: list[int] | None = None
    downstream_tasks: list[str] | None = None
    closeness: float = 0.75
    p_max: float = 0.2


class AnalyzeResponse(BaseModel):
    method: str
    languages: list[StabilitySummary]
    skipped: dict[str, str]


class ReportRequest(BaseModel):
    results_csv: str
    out_dir: str
    method: Literal["pearson", "spearman"] = "pearson"
    probing_sizes: list[int] | None = None
    downstream_tasks: list[str] | None = None
    profile_classifier: str = "lr"
    profile_size: int | None = None


class ReportResponse(BaseModel):
    written: list[str]
    skipped: dict[str, str]
