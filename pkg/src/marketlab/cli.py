"""Command-line client for the marketlab service.

Subcommands run against an in-process service instance by default, so the
tool works offline with no daemon; pass --server to target a running
instance instead (artifacts are then written on the server's filesystem).

Exit codes: 0 success, 1 usage error, 2 pipeline error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from . import __version__
from .datasets import dataset_path, list_datasets
from .errors import MarketLabError
from .provider import DEFAULT_BASE_URL, resolve_api_key

DEFAULT_OUT_DIR = "marketlab_out"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


class ServiceClient:
    """Thin HTTP client; in-process ASGI when no server URL is configured."""

    def __init__(self, server: str | None = None):
        self.server = server
        self._app = None

    def request(self, method: str, path: str, payload=None, params=None):
        if self.server:
            try:
                with httpx.Client(base_url=self.server, timeout=600.0) as client:
                    resp = client.request(method, path, json=payload, params=params)
            except httpx.HTTPError as e:
                raise MarketLabError(f"cannot reach server {self.server}: {e}") from e
            return resp.status_code, _decode(resp)
        return asyncio.run(self._in_process(method, path, payload, params))

    async def _in_process(self, method, path, payload, params):
        if self._app is None:
            from .service import create_app

            self._app = create_app()
        transport = httpx.ASGITransport(app=self._app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://marketlab.internal", timeout=None
        ) as client:
            resp = await client.request(method, path, json=payload, params=params)
            return resp.status_code, _decode(resp)


def _decode(resp: httpx.Response):
    try:
        return resp.json()
    except ValueError:
        return {"detail": resp.text}


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise MarketLabError(f"no config file {p}")
    try:
        cfg = json.loads(p.read_text())
    except ValueError as e:
        raise MarketLabError(f"config file {p} is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise MarketLabError(f"config file {p} must hold a JSON object")
    return cfg


def _pick(flag_value, config: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; keys match flag names")
    common.add_argument("--seed", type=int, help="override the experiment seed")
    common.add_argument("--out-dir", help=f"artifact directory (default {DEFAULT_OUT_DIR})")
    common.add_argument("--server", help="service URL; default runs the service in-process")

    parser = _Parser(prog="marketlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"marketlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("fetch", parents=[common], help="fetch daily series into the cache")
    p.add_argument("symbols", nargs="*", help="instrument symbols")
    p.add_argument("--symbol-set", help="named symbol set, e.g. oil-majors")
    p.add_argument("--base-url", help="provider endpoint")
    p.add_argument("--api-key", help="provider API key (or config/env)")
    p.add_argument("--cache-dir", help="cache directory (default <out-dir>/cache)")
    p.add_argument("--request-interval-ms", type=int, help="minimum ms between requests")
    p.add_argument("--refresh", action="store_true", help="bypass the cache")
    p.set_defaults(handler=cmd_fetch)

    p = sub.add_parser("corr", parents=[common], help="correlation matrix and heatmap")
    p.add_argument("inputs", nargs="+", help="one aligned-frame CSV, or several series CSVs")
    p.add_argument("--columns", help="comma-separated column subset")
    p.add_argument("--windowed", action="store_true", help="add windowed correlation reports")
    p.add_argument("--window-len", type=int, default=40)
    p.add_argument("--series", action="store_true", help="treat a single input as a series file")
    p.set_defaults(handler=cmd_corr)

    p = sub.add_parser("acf", parents=[common], help="autocorrelation of one frame column")
    p.add_argument("column", help="frame column, e.g. BP.close")
    p.add_argument("--frame", required=True, help="aligned-frame CSV (or dataset:<name>)")
    p.add_argument("--max-lag", type=int, required=True)
    p.add_argument("--suggest", action="store_true", help="suggest a lookback from the ACF")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(handler=cmd_acf)

    p = sub.add_parser("train", parents=[common], help="run one training experiment")
    p.add_argument("spec", help="experiment spec JSON file")
    p.add_argument("--variant", help="override the spec's feature variant")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("ablate", parents=[common], help="run the feature-ablation sweep")
    p.add_argument("spec", help="experiment spec JSON file with a 'variants' list")
    p.add_argument("--variants", help="comma-separated variants overriding the spec")
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("report", parents=[common], help="summarize a persisted run")
    p.add_argument("run", help="run id or run directory path")
    p.add_argument("--runs-root", help="runs directory (default <out-dir>/runs)")
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(handler=cmd_serve)

    p = sub.add_parser("datasets", parents=[common], help="list bundled datasets or print a path")
    p.add_argument("name", nargs="?", help="dataset file name")
    p.set_defaults(handler=cmd_datasets)

    return parser


def _context(args) -> tuple[ServiceClient, dict, str]:
    config = load_config(args.config)
    out_dir = _pick(args.out_dir, config, "out_dir", DEFAULT_OUT_DIR)
    server = _pick(args.server, config, "server", None)
    return ServiceClient(server), config, out_dir


def _call(client: ServiceClient, method: str, path: str, payload=None, params=None):
    status, body = client.request(method, path, payload=payload, params=params)
    if status != 200:
        detail = body.get("detail", body) if isinstance(body, dict) else body
        print(f"error: {detail}", file=sys.stderr)
        return None
    return body


def cmd_fetch(args) -> int:
    client, config, out_dir = _context(args)
    payload = {
        "symbols": args.symbols,
        "symbol_set": args.symbol_set,
        "base_url": _pick(args.base_url, config, "base_url", DEFAULT_BASE_URL),
        "api_key": resolve_api_key(args.api_key, config.get("api_key")),
        "cache_dir": _pick(args.cache_dir, config, "cache_dir", str(Path(out_dir) / "cache")),
        "request_interval_ms": _pick(args.request_interval_ms, config, "request_interval_ms", 0),
        "refresh": args.refresh,
    }
    body = _call(client, "POST", "/fetch", payload)
    if body is None:
        return 2
    for s in body["series"]:
        print(f"{s['symbol']}: {s['rows']} bars {s['first_date']}..{s['last_date']} -> {s['cache_path']}")
    return 0


def cmd_corr(args) -> int:
    client, _, out_dir = _context(args)
    as_series = args.series or len(args.inputs) > 1
    payload = {
        "frame": None if as_series else args.inputs[0],
        "series": args.inputs if as_series else [],
        "columns": args.columns.split(",") if args.columns else None,
        "windowed": args.windowed,
        "window_len": args.window_len,
        "out_dir": out_dir,
    }
    body = _call(client, "POST", "/corr", payload)
    if body is None:
        return 2
    labels = body["labels"]
    width = max(len(l) for l in labels) + 2
    print(" " * width + "  ".join(l.rjust(9) for l in labels))
    for label, row in zip(labels, body["values"]):
        print(label.ljust(width) + "  ".join(f"{v:9.6f}" for v in row))
    for rep in body["windowed"]:
        print(
            f"{rep['pair']}: windows={len(rep['window_indices'])} skipped={rep['skipped_windows']} "
            f"counts={rep['counts']} mean={rep['mean']:.6f} median={rep['median']:.6f}"
            if rep["mean"] is not None
            else f"{rep['pair']}: all {rep['skipped_windows']} windows skipped"
        )
    for name, path in body["artifacts"].items():
        print(f"{name}: {path}")
    return 0


def cmd_acf(args) -> int:
    client, _, _ = _context(args)
    payload = {
        "frame": args.frame,
        "column": args.column,
        "max_lag": args.max_lag,
        "suggest": args.suggest,
        "threshold": args.threshold,
    }
    body = _call(client, "POST", "/acf", payload)
    if body is None:
        return 2
    for k, v in enumerate(body["acf"]):
        print(f"lag {k}: {v:.6f}")
    if body.get("suggested_lookback") is not None:
        print(f"suggested lookback (threshold {args.threshold}): {body['suggested_lookback']}")
    return 0


def _load_spec_file(path_str: str) -> dict:
    path = Path(path_str)
    if not path.exists():
        raise MarketLabError(f"no spec file {path}")
    try:
        spec = json.loads(path.read_text())
    except ValueError as e:
        raise MarketLabError(f"spec file {path} is not valid JSON: {e}") from e
    if not isinstance(spec, dict):
        raise MarketLabError(f"spec file {path} must hold a JSON object")
    return spec


def _experiment_payload(args, spec: dict, out_dir: str, config: dict) -> dict:
    payload = {k: v for k, v in spec.items() if k not in ("variants",)}
    payload["out_dir"] = out_dir
    seed = args.seed if args.seed is not None else config.get("seed")
    if seed is not None:
        payload.setdefault("train", {})
        payload["train"]["seed"] = seed
    return payload


def _print_metrics(metrics: dict):
    print(
        f"metrics ({metrics['scale']} scale): "
        f"MSE={metrics['mse']:.6g} RMSE={metrics['rmse']:.6g} "
        f"MAE={metrics['mae']:.6g} MAPE={metrics['mape']:.6g}"
    )


def cmd_train(args) -> int:
    client, config, out_dir = _context(args)
    spec = _load_spec_file(args.spec)
    payload = _experiment_payload(args, spec, out_dir, config)
    if args.variant:
        payload["variant"] = args.variant
    elif "variant" not in payload and spec.get("variants"):
        payload["variant"] = spec["variants"][0]
    body = _call(client, "POST", "/train", payload)
    if body is None:
        return 2
    print(f"run {body['run_id']} [{body['variant']}] features={body['feature_columns']}")
    _print_metrics(body["metrics"])
    print(f"artifacts in {body['run_dir']}")
    return 0


def cmd_ablate(args) -> int:
    client, config, out_dir = _context(args)
    spec = _load_spec_file(args.spec)
    payload = _experiment_payload(args, spec, out_dir, config)
    payload.pop("variant", None)
    if args.variants:
        payload["variants"] = [v.strip() for v in args.variants.split(",") if v.strip()]
    elif spec.get("variants"):
        payload["variants"] = spec["variants"]
    else:
        raise MarketLabError("spec file has no 'variants' list and --variants was not given")
    body = _call(client, "POST", "/ablate", payload)
    if body is None:
        return 2
    print(body["table_text"], end="")
    for name, path in body["artifacts"].items():
        print(f"{name}: {path}")
    if body["failed"]:
        print(f"failed variants: {', '.join(body['failed'])}", file=sys.stderr)
        return 2
    return 0


def cmd_report(args) -> int:
    client, config, out_dir = _context(args)
    run_path = Path(args.run)
    if run_path.is_dir():
        runs_root, run_id = str(run_path.parent), run_path.name
    else:
        runs_root = _pick(args.runs_root, config, "runs_root", str(Path(out_dir) / "runs"))
        run_id = args.run
    body = _call(client, "GET", f"/runs/{run_id}", params={"runs_root": runs_root})
    if body is None:
        return 2
    spec = body["spec"]["spec"]
    print(f"run {body['run_id']}: target={spec['target']} variant={spec['variant']}")
    print(f"features: {body['spec']['feature_columns']}")
    _print_metrics(body["metrics"])
    print(f"files: {', '.join(body['files'])}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def cmd_datasets(args) -> int:
    if args.name:
        print(dataset_path(args.name))
    else:
        for name in list_datasets():
            print(name)
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    try:
        return args.handler(args)
    except MarketLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
