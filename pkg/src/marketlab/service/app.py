"""FastAPI application wrapping the core package.

Every endpoint is a stateless translation layer: parse the request model,
call the corresponding library function, persist artifacts under the
request's out_dir, and return a summary. Domain errors map to HTTP 400.
"""

from __future__ import annotations

import datetime as dt
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..correlation import (
    autocorrelation,
    correlation_matrix,
    select_lookback,
    summary_csv,
    windowed_correlations,
    windowed_csv,
)
from ..datasets import resolve_data_path
from ..errors import MarketLabError
from ..experiments import ExperimentSpec, ModelSettings, run_ablation, run_experiment
from ..frame import AlignedFrame, align
from ..ohlcv import parse_csv
from ..provider import SYMBOL_SETS, ProviderClient, ProviderConfig
from ..svgplot import export_heatmap
from ..training import TrainConfig
from . import schemas


def _load_frame(path_str: str) -> AlignedFrame:
    path = resolve_data_path(path_str)
    if not path.exists():
        raise MarketLabError(f"no such data file: {path}")
    return AlignedFrame.from_csv(path.read_text())


def _metrics_model(report) -> schemas.MetricsModel:
    return schemas.MetricsModel(
        mse=report.mse, rmse=report.rmse, mae=report.mae, mape=report.mape
    )


def _experiment_spec(req, variant: str) -> ExperimentSpec:
    return ExperimentSpec(
        target=req.target,
        variant=variant,
        custom_features=tuple(req.custom_features),
        augment_ohlc=req.augment_ohlc,
        train_last=dt.date.fromisoformat(req.train_last),
        test_first=dt.date.fromisoformat(req.test_first),
        test_last=dt.date.fromisoformat(req.test_last),
        model=ModelSettings(**req.model.model_dump()),
        train=TrainConfig(**req.train.model_dump()),
    )


def _run_artifacts(run_dir: Path) -> dict[str, str]:
    return {p.name: str(p) for p in sorted(run_dir.iterdir())}


def create_app() -> FastAPI:
    app = FastAPI(title="marketlab", version=__version__)

    @app.exception_handler(MarketLabError)
    async def _domain_error(_: Request, exc: MarketLabError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/fetch", response_model=schemas.FetchResponse)
    def fetch(req: schemas.FetchRequest):
        symbols = list(req.symbols)
        if req.symbol_set:
            if req.symbol_set not in SYMBOL_SETS:
                raise MarketLabError(
                    f"unknown symbol set {req.symbol_set!r}; have {sorted(SYMBOL_SETS)}"
                )
            symbols.extend(s for s in SYMBOL_SETS[req.symbol_set] if s not in symbols)
        if not symbols:
            raise MarketLabError("no symbols requested")
        cfg = ProviderConfig(
            base_url=req.base_url,
            api_key=req.api_key,
            request_interval_ms=req.request_interval_ms,
            cache_dir=req.cache_dir,
        )
        client = ProviderClient(cfg)
        out = []
        for symbol in symbols:
            series = client.fetch_daily(symbol, refresh=req.refresh)
            out.append(
                schemas.SeriesSummary(
                    symbol=symbol,
                    rows=len(series),
                    first_date=series.bars[0].date.isoformat(),
                    last_date=series.bars[-1].date.isoformat(),
                    cache_path=str(Path(req.cache_dir) / f"{symbol}.csv"),
                )
            )
        return schemas.FetchResponse(series=out)

    @app.post("/corr", response_model=schemas.CorrResponse)
    def corr(req: schemas.CorrRequest):
        if req.frame and req.series:
            raise MarketLabError("give either a frame or series files, not both")
        if req.frame:
            frame = _load_frame(req.frame)
        elif req.series:
            series = []
            for path_str in req.series:
                path = resolve_data_path(path_str)
                if not path.exists():
                    raise MarketLabError(f"no such data file: {path}")
                series.append(parse_csv(path.read_text(), symbol=path.stem))
            frame = align(series)
        else:
            raise MarketLabError("need a frame or at least one series file")

        columns = req.columns or list(frame.column_names)
        matrix = correlation_matrix(frame, columns)

        out_dir = Path(req.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts = {
            "matrix_csv": str(out_dir / "matrix.csv"),
            "heatmap_svg": str(out_dir / "heatmap.svg"),
        }
        (out_dir / "matrix.csv").write_text(matrix.to_csv())
        export_heatmap(matrix, out_dir / "heatmap.svg")

        windowed_models: list[schemas.WindowedPairModel] = []
        if req.windowed:
            reports = []
            for i in range(len(columns)):
                for j in range(i + 1, len(columns)):
                    rep = windowed_correlations(
                        frame.column(columns[i]),
                        frame.column(columns[j]),
                        req.window_len,
                        pair=(columns[i], columns[j]),
                    )
                    reports.append(rep)
                    stats = rep.stats
                    windowed_models.append(
                        schemas.WindowedPairModel(
                            pair=f"{columns[i]}-{columns[j]}",
                            window_len=rep.window_len,
                            correlations=[float(r) for r in rep.window_correlations],
                            window_indices=list(rep.window_indices),
                            skipped_windows=rep.skipped_windows,
                            counts=list(rep.counts),
                            percents=list(rep.percents),
                            median=stats.median if stats else None,
                            mean=stats.mean if stats else None,
                            variance=stats.variance if stats else None,
                            std_dev=stats.std_dev if stats else None,
                        )
                    )
            (out_dir / "windowed.csv").write_text(windowed_csv(reports))
            (out_dir / "windowed_summary.csv").write_text(summary_csv(reports))
            artifacts["windowed_csv"] = str(out_dir / "windowed.csv")
            artifacts["windowed_summary_csv"] = str(out_dir / "windowed_summary.csv")

        return schemas.CorrResponse(
            labels=list(matrix.labels),
            values=[[float(v) for v in row] for row in matrix.values],
            artifacts=artifacts,
            windowed=windowed_models,
        )

    @app.post("/acf", response_model=schemas.AcfResponse)
    def acf(req: schemas.AcfRequest):
        frame = _load_frame(req.frame)
        report = autocorrelation(frame.column(req.column), req.max_lag, name=req.column)
        suggestion = select_lookback(report, req.threshold) if req.suggest else None
        return schemas.AcfResponse(
            series=report.series,
            acf=[float(v) for v in report.acf],
            suggested_lookback=suggestion,
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_endpoint(req: schemas.ExperimentRequest):
        frame = _load_frame(req.data)
        spec = _experiment_spec(req, req.variant)
        runs_root = Path(req.out_dir) / "runs"
        result = run_experiment(spec, frame, runs_root, reuse=req.reuse)
        return schemas.TrainResponse(
            run_id=result.run_id,
            run_dir=str(result.run_dir),
            variant=spec.variant,
            feature_columns=result.feature_columns,
            metrics=_metrics_model(result.metrics),
            duration_s=result.duration_s,
            artifacts=_run_artifacts(result.run_dir),
        )

    @app.post("/ablate", response_model=schemas.AblateResponse)
    def ablate(req: schemas.AblateRequest):
        if not req.variants:
            raise MarketLabError("need at least one variant")
        frame = _load_frame(req.data)
        specs = [_experiment_spec(req, v) for v in req.variants]
        runs_root = Path(req.out_dir) / "runs"
        table = run_ablation(specs, frame, runs_root, reuse=req.reuse)

        out_dir = Path(req.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "ablation.csv").write_text(table.to_csv())
        (out_dir / "ablation.txt").write_text(table.to_text())

        rows = []
        for variant, metrics in table.rows.items():
            rows.append(
                schemas.AblateRow(
                    variant=variant,
                    metrics=_metrics_model(metrics) if metrics else None,
                    run_id=table.run_ids.get(variant),
                    error=table.errors.get(variant),
                )
            )
        return schemas.AblateResponse(
            rows=rows,
            best=table.best,
            failed=table.failed,
            table_text=table.to_text(),
            artifacts={
                "ablation_csv": str(out_dir / "ablation.csv"),
                "ablation_txt": str(out_dir / "ablation.txt"),
            },
        )

    @app.get("/runs/{run_id}", response_model=schemas.RunReportResponse)
    def run_report(run_id: str, runs_root: str):
        run_dir = Path(runs_root) / run_id
        if not (run_dir / "metrics.json").exists():
            raise HTTPException(status_code=404, detail=f"no run {run_id!r} under {runs_root}")
        spec_doc = json.loads((run_dir / "spec.json").read_text())
        metrics_doc = json.loads((run_dir / "metrics.json").read_text())
        return schemas.RunReportResponse(
            run_id=run_id,
            run_dir=str(run_dir),
            spec=spec_doc,
            metrics=metrics_doc,
            files=sorted(p.name for p in run_dir.iterdir()),
        )

    return app
