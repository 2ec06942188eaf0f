"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..provider import DEFAULT_BASE_URL


class HealthResponse(BaseModel):
    status: str
    version: str


class FetchRequest(BaseModel):
    symbols: list[str] = Field(default_factory=list)
    symbol_set: str | None = None
    base_url: str = DEFAULT_BASE_URL
    api_key: str = ""
    cache_dir: str
    request_interval_ms: int = 0
    refresh: bool = False


class SeriesSummary(BaseModel):
    symbol: str
    rows: int
    first_date: str
    last_date: str
    cache_path: str


class FetchResponse(BaseModel):
    series: list[SeriesSummary]


class CorrRequest(BaseModel):
    frame: str | None = None
    series: list[str] = Field(default_factory=list)
    columns: list[str] | None = None
    windowed: bool = False
    window_len: int = 40
    out_dir: str


class WindowedPairModel(BaseModel):
    pair: str
    window_len: int
    correlations: list[float]
    window_indices: list[int]
    skipped_windows: int
    counts: list[int]
    percents: list[float]
    median: float | None = None
    mean: float | None = None
    variance: float | None = None
    std_dev: float | None = None


class CorrResponse(BaseModel):
    labels: list[str]
    values: list[list[float]]
    artifacts: dict[str, str]
    windowed: list[WindowedPairModel] = Field(default_factory=list)


class AcfRequest(BaseModel):
    frame: str
    column: str
    max_lag: int
    suggest: bool = False
    threshold: float = 0.5


class AcfResponse(BaseModel):
    series: str
    acf: list[float]
    suggested_lookback: int | None = None


class ModelSettingsModel(BaseModel):
    hidden_dim: int = 50
    lookback: int = 40
    dense_dim: int = 64
    dropout_rate: float = 0.2


class TrainSettingsModel(BaseModel):
    learning_rate: float = 0.0005
    epochs: int = 50
    batch_size: int = 25
    validation_fraction: float = 0.1
    seed: int = 0
    shuffle: bool = False


class ExperimentRequest(BaseModel):
    data: str
    target: str
    variant: str = "main"
    custom_features: list[str] = Field(default_factory=list)
    augment_ohlc: bool = False
    train_last: str
    test_first: str
    test_last: str
    model: ModelSettingsModel = Field(default_factory=ModelSettingsModel)
    train: TrainSettingsModel = Field(default_factory=TrainSettingsModel)
    out_dir: str
    reuse: bool = True


class AblateRequest(BaseModel):
    data: str
    target: str
    variants: list[str]
    custom_features: list[str] = Field(default_factory=list)
    augment_ohlc: bool = False
    train_last: str
    test_first: str
    test_last: str
    model: ModelSettingsModel = Field(default_factory=ModelSettingsModel)
    train: TrainSettingsModel = Field(default_factory=TrainSettingsModel)
    out_dir: str
    reuse: bool = True


class MetricsModel(BaseModel):
    mse: float
    rmse: float
    mae: float
    mape: float
    scale: str = "original"


class TrainResponse(BaseModel):
    run_id: str
    run_dir: str
    variant: str
    feature_columns: list[str]
    metrics: MetricsModel
    duration_s: float
    artifacts: dict[str, str]


class AblateRow(BaseModel):
    variant: str
    metrics: MetricsModel | None = None
    run_id: str | None = None
    error: str | None = None


class AblateResponse(BaseModel):
    rows: list[AblateRow]
    best: dict[str, str]
    failed: list[str]
    table_text: str
    artifacts: dict[str, str]


class RunReportResponse(BaseModel):
    run_id: str
    run_dir: str
    spec: dict
    metrics: dict
    files: list[str]
