import datetime as dt
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np
import pytest

from marketlab.datasets import dataset_path
from marketlab.frame import AlignedFrame
from marketlab.ohlcv import OhlcvBar, OhlcvSeries


def make_series(symbol: str, start: dt.date, closes, volume: bool = False) -> OhlcvSeries:
    """Build a series with valid bar geometry around the given closes."""
    bars = []
    day = start
    for c in closes:
        c = float(c)
        bars.append(
            OhlcvBar(
                date=day,
                open=c * 0.998,
                high=c * 1.01,
                low=c * 0.99,
                close=c,
                volume=1000.0 if volume else None,
            )
        )
        day += dt.timedelta(days=1)
    return OhlcvSeries(symbol, tuple(bars))


def make_frame(start: dt.date, columns: dict[str, list[float]]) -> AlignedFrame:
    n = len(next(iter(columns.values())))
    dates = tuple(start + dt.timedelta(days=i) for i in range(n))
    return AlignedFrame(dates, {k: np.asarray(v, dtype=np.float64) for k, v in columns.items()})


@pytest.fixture(scope="session")
def market7() -> AlignedFrame:
    return AlignedFrame.from_csv(dataset_path("market7.csv").read_text())


@pytest.fixture(scope="session")
def synth_ohlc() -> AlignedFrame:
    return AlignedFrame.from_csv(dataset_path("synth_ohlc.csv").read_text())


def alpha_vantage_payload(series: OhlcvSeries) -> dict:
    table = {}
    for b in series.bars:
        entry = {
            "1. open": str(b.open),
            "2. high": str(b.high),
            "3. low": str(b.low),
            "4. close": str(b.close),
        }
        if b.volume is not None:
            entry["5. volume"] = str(b.volume)
        table[b.date.isoformat()] = entry
    return {"Meta Data": {"2. Symbol": series.symbol}, "Time Series (Daily)": table}


class ProviderStub:
    """Local HTTP server that answers in the provider's JSON envelope."""

    def __init__(self, payloads: dict[str, dict]):
        self.payloads = payloads
        self.request_times: list[float] = []
        self.requests: list[dict] = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                stub.request_times.append(time.monotonic())
                query = parse_qs(urlparse(self.path).query)
                stub.requests.append({k: v[0] for k, v in query.items()})
                symbol = query.get("symbol", [""])[0]
                payload = stub.payloads.get(symbol, {"Error Message": f"unknown symbol {symbol}"})
                body = json.dumps(payload).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}/query"

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def provider_stub():
    created = []

    def factory(payloads: dict[str, dict]) -> ProviderStub:
        stub = ProviderStub(payloads)
        created.append(stub)
        return stub

    yield factory
    for stub in created:
        stub.close()
