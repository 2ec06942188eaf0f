"""Feature-ablation harness: run the full pipeline for one feature variant,
compare variants in a four-metric table, persist every artifact under a
content-addressed run directory.

Run directory layout (immutable once written):

    runs/<hash>/{spec.json, scaler.json, checkpoint.bin, predictions.csv,
                 metrics.json, history.csv, plot.svg, timing.json}

The hash covers the spec (seed included) plus a fingerprint of the input
frame, so identical work maps to an identical directory. ``timing.json`` is
the only file whose bytes may differ between reruns.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import shutil
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, MarketLabError, MissingColumnError, PipelineError, SplitError
from .frame import (
    AlignedFrame,
    ScalerParams,
    SupervisedTensors,
    apply_scaler,
    fit_scaler,
    invert_scaler,
    make_supervised_windows,
    split_by_date,
)
from .lstm import LstmConfig, init_params, save_checkpoint
from .svgplot import line_chart_svg
from .training import MetricsReport, TrainConfig, TrainHistory, evaluate, predict, train

VARIANT_MAIN = "main"
VARIANT_CUSTOM = "custom"
METRIC_ORDER = ("mse", "rmse", "mae", "mape")


@dataclass(frozen=True)
class ModelSettings:
    """LSTM topology minus the input width, which is derived from the variant."""

    hidden_dim: int = 50
    lookback: int = 40
    dense_dim: int = 64
    dropout_rate: float = 0.2

    def lstm_config(self, input_dim: int) -> LstmConfig:
        return LstmConfig(
            input_dim=input_dim,
            hidden_dim=self.hidden_dim,
            lookback=self.lookback,
            dense_dim=self.dense_dim,
            dropout_rate=self.dropout_rate,
        )

    def to_dict(self) -> dict:
        return {
            "hidden_dim": self.hidden_dim,
            "lookback": self.lookback,
            "dense_dim": self.dense_dim,
            "dropout_rate": self.dropout_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSettings":
        keys = ("hidden_dim", "lookback", "dense_dim", "dropout_rate")
        return cls(**{k: d[k] for k in keys if k in d})


@dataclass(frozen=True)
class ExperimentSpec:
    """One training run: a target instrument, a feature variant, and configs.

    ``variant`` is "main" (the target's OHLC columns), "+SYM" (main plus
    SYM's close, or SYM's OHLC when augment_ohlc is set), or "custom"
    (main plus ``custom_features``).
    """

    target: str
    train_last: dt.date
    test_first: dt.date
    test_last: dt.date
    variant: str = VARIANT_MAIN
    custom_features: tuple[str, ...] = ()
    augment_ohlc: bool = False
    model: ModelSettings = field(default_factory=ModelSettings)
    train: TrainConfig = field(default_factory=TrainConfig)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "variant": self.variant,
            "custom_features": list(self.custom_features),
            "augment_ohlc": self.augment_ohlc,
            "train_last": self.train_last.isoformat(),
            "test_first": self.test_first.isoformat(),
            "test_last": self.test_last.isoformat(),
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        return cls(
            target=d["target"],
            variant=d.get("variant", VARIANT_MAIN),
            custom_features=tuple(d.get("custom_features", ())),
            augment_ohlc=bool(d.get("augment_ohlc", False)),
            train_last=dt.date.fromisoformat(d["train_last"]),
            test_first=dt.date.fromisoformat(d["test_first"]),
            test_last=dt.date.fromisoformat(d["test_last"]),
            model=ModelSettings.from_dict(d.get("model", {})),
            train=TrainConfig.from_dict(d.get("train", {})),
        )


def compose_features(frame: AlignedFrame, spec: ExperimentSpec) -> tuple[list[str], str]:
    """Resolve a variant to concrete frame columns; target is always predicted
    through its close column, and every variant includes the target's OHLC."""
    base = [f"{spec.target}.{f}" for f in ("open", "high", "low", "close")]
    if spec.variant == VARIANT_MAIN:
        columns = base
    elif spec.variant == VARIANT_CUSTOM:
        columns = base + [c for c in spec.custom_features if c not in base]
    elif spec.variant.startswith("+") and len(spec.variant) > 1:
        sym = spec.variant[1:]
        if spec.augment_ohlc:
            extra = [f"{sym}.{f}" for f in ("open", "high", "low", "close")]
        else:
            extra = [f"{sym}.close"]
        columns = base + [c for c in extra if c not in base]
    else:
        raise ConfigError(f"unknown variant {spec.variant!r}")
    for c in columns:
        if c not in frame.columns:
            raise MissingColumnError(f"variant {spec.variant!r} needs column {c!r}")
    return columns, f"{spec.target}.close"


def frame_fingerprint(frame: AlignedFrame) -> str:
    """Content hash of a frame: column names, dates, and raw float64 bytes."""
    h = hashlib.sha256()
    h.update(",".join(frame.column_names).encode())
    h.update(",".join(d.isoformat() for d in frame.dates).encode())
    for name in frame.column_names:
        h.update(np.ascontiguousarray(frame.columns[name], dtype="<f8").tobytes())
    return h.hexdigest()


def run_id_for(spec: ExperimentSpec, data_fingerprint: str) -> str:
    payload = json.dumps(
        {"spec": spec.to_dict(), "data": data_fingerprint},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    run_id: str
    run_dir: Path
    feature_columns: list[str]
    metrics: MetricsReport
    dates: tuple[dt.date, ...]
    real: np.ndarray
    predicted: np.ndarray
    history: TrainHistory
    duration_s: float


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except MarketLabError as e:
        raise PipelineError(name, e) from e


def run_experiment(
    spec: ExperimentSpec,
    frame: AlignedFrame,
    runs_root,
    reuse: bool = True,
) -> ExperimentResult:
    """Split, scale, window, train, predict, evaluate, persist.

    Lookback windows are cut over the full scaled frame and then assigned to
    the train/test partitions by their prediction date, so early test samples
    keep their historical context without leaking test data into training:
    the scaler sees training dates only and every training target predates
    ``train_last``.
    """
    started = time.perf_counter()
    runs_root = Path(runs_root)
    feature_columns, target_column = _stage("compose_features", compose_features, frame, spec)

    run_id = run_id_for(spec, frame_fingerprint(frame))
    run_dir = runs_root / run_id
    if reuse and (run_dir / "metrics.json").exists():
        return load_run(run_dir)

    ordered = feature_columns + ([target_column] if target_column not in feature_columns else [])
    sub = frame.select(ordered)
    train_frame, _ = _stage(
        "split", split_by_date, sub, spec.train_last, spec.test_first, spec.test_last
    )
    scaler = _stage("fit_scaler", fit_scaler, train_frame)
    scaled = _stage("apply_scaler", apply_scaler, sub, scaler)
    tensors = _stage(
        "window", make_supervised_windows, scaled, feature_columns, target_column,
        spec.model.lookback,
    )

    train_ix = [i for i, d in enumerate(tensors.sample_dates) if d <= spec.train_last]
    test_ix = [
        i for i, d in enumerate(tensors.sample_dates)
        if spec.test_first <= d <= spec.test_last
    ]
    if not train_ix:
        raise PipelineError("partition", SplitError("no training samples after windowing"))
    if not test_ix:
        raise PipelineError("partition", SplitError("no test samples after windowing"))
    train_tensors = SupervisedTensors(
        tensors.inputs[train_ix],
        tensors.targets[train_ix],
        tuple(tensors.sample_dates[i] for i in train_ix),
    )

    lstm_config = spec.model.lstm_config(len(feature_columns))
    params = init_params(lstm_config, spec.train.seed)
    params, history = _stage("train", train, params, lstm_config, train_tensors, spec.train)

    test_inputs = tensors.inputs[test_ix]
    preds_scaled = _stage("predict", predict, params, lstm_config, test_inputs)
    predicted = _stage("invert_scale", invert_scaler, preds_scaled, target_column, scaler)

    date_index = {d: i for i, d in enumerate(sub.dates)}
    test_dates = tuple(tensors.sample_dates[i] for i in test_ix)
    real = np.asarray([sub.column(target_column)[date_index[d]] for d in test_dates])
    metrics = _stage("evaluate", evaluate, real, predicted)

    duration = time.perf_counter() - started
    result = ExperimentResult(
        spec=spec,
        run_id=run_id,
        run_dir=run_dir,
        feature_columns=list(feature_columns),
        metrics=metrics,
        dates=test_dates,
        real=real,
        predicted=predicted,
        history=history,
        duration_s=duration,
    )
    _persist_run(result, params, lstm_config, scaler)
    return result


def _persist_run(result: ExperimentResult, params, lstm_config: LstmConfig, scaler: ScalerParams):
    run_dir = result.run_dir
    tmp = run_dir.with_name(run_dir.name + ".tmp")
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)

    spec_doc = {
        "run_id": result.run_id,
        "spec": result.spec.to_dict(),
        "feature_columns": result.feature_columns,
        "input_dim": len(result.feature_columns),
    }
    (tmp / "spec.json").write_text(json.dumps(spec_doc, sort_keys=True, indent=2) + "\n")
    (tmp / "scaler.json").write_text(
        json.dumps(scaler.to_dict(), sort_keys=True, indent=2) + "\n"
    )
    save_checkpoint(tmp / "checkpoint.bin", params, lstm_config, result.spec.train.seed)

    rows = ["date,real,predicted"]
    for d, r, p in zip(result.dates, result.real, result.predicted):
        rows.append(f"{d.isoformat()},{float(r)!r},{float(p)!r}")
    (tmp / "predictions.csv").write_text("\n".join(rows) + "\n")

    metrics_doc = {
        "run_id": result.run_id,
        "scale": "original",
        **result.metrics.to_dict(),
        "n_test": len(result.dates),
    }
    (tmp / "metrics.json").write_text(json.dumps(metrics_doc, sort_keys=True, indent=2) + "\n")
    (tmp / "history.csv").write_text(result.history.to_csv())
    render_prediction_plot(result, tmp / "plot.svg")
    (tmp / "timing.json").write_text(
        json.dumps({"duration_s": result.duration_s}, sort_keys=True) + "\n"
    )

    if run_dir.exists():
        shutil.rmtree(run_dir)
    tmp.rename(run_dir)


def load_run(run_dir) -> ExperimentResult:
    """Rehydrate an ExperimentResult from a persisted run directory."""
    run_dir = Path(run_dir)
    spec_doc = json.loads((run_dir / "spec.json").read_text())
    metrics_doc = json.loads((run_dir / "metrics.json").read_text())
    lines = [ln for ln in (run_dir / "predictions.csv").read_text().splitlines() if ln.strip()][1:]
    dates = tuple(dt.date.fromisoformat(ln.split(",")[0]) for ln in lines)
    real = np.asarray([float(ln.split(",")[1]) for ln in lines])
    predicted = np.asarray([float(ln.split(",")[2]) for ln in lines])
    timing = json.loads((run_dir / "timing.json").read_text())
    return ExperimentResult(
        spec=ExperimentSpec.from_dict(spec_doc["spec"]),
        run_id=spec_doc["run_id"],
        run_dir=run_dir,
        feature_columns=list(spec_doc["feature_columns"]),
        metrics=MetricsReport(
            mse=metrics_doc["mse"],
            rmse=metrics_doc["rmse"],
            mae=metrics_doc["mae"],
            mape=metrics_doc["mape"],
        ),
        dates=dates,
        real=real,
        predicted=predicted,
        history=TrainHistory.from_csv((run_dir / "history.csv").read_text()),
        duration_s=float(timing["duration_s"]),
    )


def render_prediction_plot(result: ExperimentResult, path) -> Path:
    """Real vs predicted prices over the test dates as a deterministic SVG."""
    if len(result.dates) == 0:
        raise ConfigError("result has no predictions to plot")
    title = f"{result.spec.target} [{result.spec.variant}] real vs predicted"
    svg = line_chart_svg(
        result.dates,
        {"real": result.real, "predicted": result.predicted},
        title=title,
    )
    path = Path(path)
    path.write_bytes(svg.encode("utf-8"))
    return path


@dataclass
class AblationTable:
    """Per-variant metric rows plus the per-metric minimum marking."""

    rows: dict[str, MetricsReport | None]
    errors: dict[str, str]
    run_ids: dict[str, str]
    best: dict[str, str]

    @property
    def failed(self) -> list[str]:
        return [v for v, m in self.rows.items() if m is None]

    def to_csv(self) -> str:
        out = ["variant,mse,rmse,mae,mape,run_id,error"]
        for variant, m in self.rows.items():
            if m is None:
                out.append(f"{variant},,,,,,{self.errors.get(variant, 'failed')}")
            else:
                out.append(
                    f"{variant},{m.mse!r},{m.rmse!r},{m.mae!r},{m.mape!r},"
                    f"{self.run_ids.get(variant, '')},"
                )
        return "\n".join(out) + "\n"

    def to_text(self) -> str:
        header = ["variant"] + [m.upper() for m in METRIC_ORDER]
        body: list[list[str]] = []
        for variant, m in self.rows.items():
            if m is None:
                body.append([variant] + ["failed"] * 4)
                continue
            cells = []
            for metric in METRIC_ORDER:
                mark = "*" if self.best.get(metric) == variant else " "
                cells.append(f"{getattr(m, metric):.6g}{mark}")
            body.append([variant] + cells)
        widths = [max(len(r[c]) for r in [header] + body) for c in range(5)]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(header, widths)),
            "  ".join("-" * w for w in widths),
        ]
        for row in body:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
        lines.append("(* marks the best variant per metric)")
        return "\n".join(lines) + "\n"


def mark_minima(rows: dict[str, MetricsReport | None]) -> dict[str, str]:
    best: dict[str, str] = {}
    for metric in METRIC_ORDER:
        candidates = [(getattr(m, metric), v) for v, m in rows.items() if m is not None]
        if candidates:
            best[metric] = min(candidates)[1]
    return best


def run_replicates(
    spec: ExperimentSpec,
    frame: AlignedFrame,
    runs_root,
    seeds: list[int] | tuple[int, ...],
    reuse: bool = True,
) -> tuple[list[ExperimentResult], MetricsReport]:
    """Run the same experiment across seeds and aggregate per-metric medians.

    Single-run metric deltas at this scale are noise-dominated, so variant
    comparisons should use the median report rather than any single seed.
    """
    if not seeds:
        raise ConfigError("need at least one seed")
    results = []
    for seed in seeds:
        seeded = replace(spec, train=replace(spec.train, seed=seed))
        results.append(run_experiment(seeded, frame, runs_root, reuse=reuse))
    median = MetricsReport(
        mse=float(np.median([r.metrics.mse for r in results])),
        rmse=float(np.median([r.metrics.rmse for r in results])),
        mae=float(np.median([r.metrics.mae for r in results])),
        mape=float(np.median([r.metrics.mape for r in results])),
    )
    return results, median


def run_ablation(
    specs: list[ExperimentSpec],
    frame: AlignedFrame,
    runs_root,
    reuse: bool = True,
) -> AblationTable:
    """Run every variant spec and assemble the comparison table.

    Specs must agree on everything except the variant. A failing variant is
    recorded in the table rather than aborting the sweep.
    """
    if not specs:
        raise ConfigError("need at least one spec")
    reference = replace(specs[0], variant=VARIANT_MAIN, custom_features=(), augment_ohlc=False)
    seen: set[str] = set()
    for s in specs:
        if s.variant in seen:
            raise ConfigError(f"duplicate variant {s.variant!r}")
        seen.add(s.variant)
        if replace(s, variant=VARIANT_MAIN, custom_features=(), augment_ohlc=False) != reference:
            raise ConfigError("specs must differ only in their variant")

    rows: dict[str, MetricsReport | None] = {}
    errors: dict[str, str] = {}
    run_ids: dict[str, str] = {}
    for s in specs:
        try:
            result = run_experiment(s, frame, runs_root, reuse=reuse)
        except MarketLabError as e:
            rows[s.variant] = None
            errors[s.variant] = str(e)
            continue
        rows[s.variant] = result.metrics
        run_ids[s.variant] = result.run_id
    return AblationTable(rows=rows, errors=errors, run_ids=run_ids, best=mark_minima(rows))
