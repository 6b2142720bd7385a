"""Request/response models for the mixlens service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict


class TrainRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())
    data_path: str
    out_path: str
    format: str = "tsv"
    epochs: int = 300
    learning_rate: float = 0.5
    l2: float = 1e-4
    seed: int = 0
    class_names: list[str] | None = None


class TrainResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())
    final_loss: float
    accuracy: float
    num_instances: int
    num_classes: int
    num_features: int
    model_digest: str


class PredictRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())
    model: str  # "ref:<path>" or "ext:<command>"
    texts: list[str]


class PredictResponse(BaseModel):
    classes: list[str]
    probs: list[list[float]]


class ExplainRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())
    model: str
    data_path: str
    out_path: str
    method: str  # "lime" | "shap"
    format: str = "tsv"
    num_samples: int = 1000
    kernel_width: float = 25.0
    ridge_lambda: float = 1.0
    max_features: int | None = None
    exhaustive: bool = False
    budget: int = 2048
    target_space: str = "probability"
    seed: int = 0
    jobs: int | None = None
    overwrite: bool = True


class ExplainResponse(BaseModel):
    num_instances: int
    config_digest: str
    out_path: str


class EvalRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())
    expl_path: str
    data_path: str
    model: str
    out_path: str
    format: str = "tsv"
    vocab_path: str | None = None
    variants: list[str] = ["sentence", "model", "codemixed"]
    n_values: list[int] = [1, 2, 3, 4, 5]
    baseline: bool = False
    seed: int = 0
    force: bool = False
    rank_by_abs: bool = False
    epsilon: float = 1e-6


class EvalResponse(BaseModel):
    rows: int
    out_path: str


class ReportRequest(BaseModel):
    csv_paths: list[str]
    out_svg: str
    out_summary: str | None = None


class ReportResponse(BaseModel):
    num_panels: int
    num_lines: int
    out_svg: str
    summary: str


class HealthResponse(BaseModel):
    status: str
    version: str
