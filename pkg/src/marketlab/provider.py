"""Daily-series client for an Alpha-Vantage-compatible JSON endpoint.

The client is cache-first: a warm cache answers without touching the network,
and every successful fetch is written through as canonical OHLCV CSV so
cached files double as fixtures. Outbound requests are serialized and spaced
at least ``request_interval_ms`` apart. The API key is sent as a query
parameter and never written to logs, cache files, or run artifacts.
"""

from __future__ import annotations

import datetime as dt
import os
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from .errors import ProviderError, RateLimitError
from .ohlcv import OhlcvBar, OhlcvSeries, parse_csv, serialize_csv

API_KEY_ENV = "MARKETLAB_API_KEY"
DEFAULT_BASE_URL = "https://www.alphavantage.co/query"

# instruments studied by default: four oil majors plus the comparison indices
SYMBOL_SETS: dict[str, tuple[str, ...]] = {
    "oil-majors": ("FP.PA", "CNE.L", "BP.L", "SLB.PA", "WTI", "GOLD", "USD"),
}

_PAYLOAD_KEY = "Time Series (Daily)"
_FIELD_KEYS = {"open": "1. open", "high": "2. high", "low": "3. low", "close": "4. close"}
_VOLUME_KEY = "5. volume"


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = DEFAULT_BASE_URL
    api_key: str = ""
    request_interval_ms: int = 0
    cache_dir: str | Path = "cache"
    timeout_s: float = 30.0

    def __post_init__(self):
        if self.request_interval_ms < 0:
            raise ProviderError(f"request_interval_ms must be >= 0, got {self.request_interval_ms}")


def _cache_path(cfg: ProviderConfig, symbol: str) -> Path:
    safe = symbol.replace("/", "_").replace("\\", "_")
    return Path(cfg.cache_dir) / f"{safe}.csv"


class ProviderClient:
    """Serialized, throttled access to one provider endpoint."""

    def __init__(self, cfg: ProviderConfig):
        self.cfg = cfg
        self._last_request: float | None = None

    def _throttle(self):
        interval = self.cfg.request_interval_ms / 1000.0
        if interval > 0 and self._last_request is not None:
            wait = self._last_request + interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)

    def fetch_daily(self, symbol: str, refresh: bool = False) -> OhlcvSeries:
        """Return the daily series for a symbol, from cache when warm."""
        cache = _cache_path(self.cfg, symbol)
        if cache.exists() and not refresh:
            return parse_csv(cache.read_text(), symbol=symbol)

        self._throttle()
        params = {
            "function": "TIME_SERIES_DAILY",
            "symbol": symbol,
            "apikey": self.cfg.api_key,
            "outputsize": "full",
        }
        try:
            response = httpx.get(self.cfg.base_url, params=params, timeout=self.cfg.timeout_s)
            response.raise_for_status()
        except httpx.HTTPError as e:
            raise ProviderError(f"request for {symbol!r} failed: {e.__class__.__name__}: {e}") from e
        finally:
            # stamp after completion so the next request is spaced from here
            self._last_request = time.monotonic()
        try:
            payload = response.json()
        except ValueError as e:
            raise ProviderError(f"non-JSON payload for {symbol!r}") from e

        series = parse_payload(payload, symbol)
        cache.parent.mkdir(parents=True, exist_ok=True)
        tmp = cache.with_suffix(".csv.tmp")
        tmp.write_text(serialize_csv(series))
        os.replace(tmp, cache)
        return series


def parse_payload(payload: dict, symbol: str) -> OhlcvSeries:
    """Turn the provider's JSON envelope into a date-ascending series."""
    if not isinstance(payload, dict):
        raise ProviderError(f"unexpected payload type for {symbol!r}")
    for key in ("Note", "Information"):
        if key in payload:
            raise RateLimitError(f"provider throttled {symbol!r}: {payload[key]}")
    if "Error Message" in payload:
        raise ProviderError(f"provider rejected {symbol!r}: {payload['Error Message']}")
    table = payload.get(_PAYLOAD_KEY)
    if not isinstance(table, dict) or not table:
        raise ProviderError(f"payload for {symbol!r} lacks {_PAYLOAD_KEY!r}")

    bars = []
    for date_str, fields in table.items():
        try:
            date = dt.date.fromisoformat(date_str)
            values = {name: float(fields[key]) for name, key in _FIELD_KEYS.items()}
            volume = float(fields[_VOLUME_KEY]) if _VOLUME_KEY in fields else None
        except (KeyError, ValueError, TypeError) as e:
            raise ProviderError(f"malformed bar {date_str!r} for {symbol!r}: {e}") from e
        bars.append(OhlcvBar(date, values["open"], values["high"], values["low"], values["close"], volume))
    bars.sort(key=lambda b: b.date)
    return OhlcvSeries(symbol, tuple(bars))


def fetch_daily(symbol: str, cfg: ProviderConfig) -> OhlcvSeries:
    """One-shot convenience wrapper around ProviderClient."""
    return ProviderClient(cfg).fetch_daily(symbol)


def resolve_api_key(flag_value: str | None, config_value: str | None) -> str:
    """Flags beat the config file, which beats the environment variable."""
    if flag_value:
        return flag_value
    if config_value:
        return config_value
    return os.environ.get(API_KEY_ENV, "")
