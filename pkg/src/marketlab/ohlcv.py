"""Daily OHLC(V) bars, series of bars, and their canonical CSV form.

The CSV layout is ``date,open,high,low,close[,volume]`` with ISO-8601 dates
and ``.`` as the decimal separator. Floats are written with ``repr`` so a
parse/serialize round trip is bit-exact.
"""

from __future__ import annotations

import datetime as dt
import itertools
from dataclasses import dataclass
from typing import IO, Iterable

from .errors import CsvFormatError, InvalidBarError

CSV_FIELDS = ("date", "open", "high", "low", "close")


@dataclass(frozen=True)
class OhlcvBar:
    """One trading day of an instrument."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: float | None = None

    def __post_init__(self):
        for name in ("open", "high", "low", "close"):
            if not getattr(self, name) > 0:
                raise InvalidBarError(f"{self.date}: {name} must be strictly positive")
        if self.low > min(self.open, self.close):
            raise InvalidBarError(f"{self.date}: low exceeds min(open, close)")
        if self.high < max(self.open, self.close):
            raise InvalidBarError(f"{self.date}: high is below max(open, close)")
        if self.low > self.high:
            raise InvalidBarError(f"{self.date}: low exceeds high")
        if self.volume is not None and self.volume < 0:
            raise InvalidBarError(f"{self.date}: volume must be non-negative")


@dataclass(frozen=True)
class OhlcvSeries:
    """Date-ascending bars for one instrument."""

    symbol: str
    bars: tuple[OhlcvBar, ...]

    def __post_init__(self):
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                raise InvalidBarError(
                    f"{self.symbol}: dates must be strictly increasing "
                    f"({prev.date} then {cur.date})"
                )

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return tuple(b.date for b in self.bars)

    def closes(self) -> list[float]:
        return [b.close for b in self.bars]


def _parse_row(line_no: int, fields: list[str], has_volume: bool) -> OhlcvBar:
    expected = 6 if has_volume else 5
    if len(fields) != expected:
        raise CsvFormatError(f"line {line_no}: expected {expected} fields, got {len(fields)}")
    try:
        date = dt.date.fromisoformat(fields[0].strip())
    except ValueError:
        raise CsvFormatError(f"line {line_no}: bad ISO date {fields[0]!r}") from None
    try:
        values = [float(f) for f in fields[1:expected]]
    except ValueError:
        raise CsvFormatError(f"line {line_no}: non-numeric price field") from None
    volume = values[4] if has_volume else None
    return OhlcvBar(date, values[0], values[1], values[2], values[3], volume)


def parse_csv(text: str | IO[str], symbol: str = "series") -> OhlcvSeries:
    """Parse canonical OHLCV CSV into a date-ascending series.

    Rows may arrive in any order; duplicate dates are rejected.
    """
    if hasattr(text, "read"):
        text = text.read()
    lines = [ln for ln in str(text).splitlines() if ln.strip()]
    if not lines:
        raise CsvFormatError("empty document")
    header = [h.strip().lower() for h in lines[0].split(",")]
    if tuple(header[:5]) != CSV_FIELDS or len(header) > 6:
        raise CsvFormatError(f"bad header {lines[0]!r}")
    has_volume = len(header) == 6
    if has_volume and header[5] != "volume":
        raise CsvFormatError(f"bad header {lines[0]!r}")

    bars: list[OhlcvBar] = []
    seen: set[dt.date] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        bar = _parse_row(line_no, line.split(","), has_volume)
        if bar.date in seen:
            raise CsvFormatError(f"line {line_no}: duplicate date {bar.date}")
        seen.add(bar.date)
        bars.append(bar)
    bars.sort(key=lambda b: b.date)
    return OhlcvSeries(symbol, tuple(bars))


def serialize_csv(series: OhlcvSeries) -> str:
    """Emit the canonical CSV for a series (inverse of parse_csv)."""
    with_volume = all(b.volume is not None for b in series.bars)
    if not with_volume and any(b.volume is not None for b in series.bars):
        raise CsvFormatError(f"{series.symbol}: mixed volume presence cannot be serialized")
    header = "date,open,high,low,close" + (",volume" if with_volume else "")
    rows = [header]
    for b in series.bars:
        row = f"{b.date.isoformat()},{b.open!r},{b.high!r},{b.low!r},{b.close!r}"
        if with_volume:
            row += f",{b.volume!r}"
        rows.append(row)
    return "\n".join(rows) + "\n"


def series_from_columns(
    symbol: str,
    dates: Iterable[dt.date],
    opens: Iterable[float],
    highs: Iterable[float],
    lows: Iterable[float],
    closes: Iterable[float],
    volumes: Iterable[float] | None = None,
) -> OhlcvSeries:
    """Assemble a series from parallel columns (helper for generators/tests)."""
    vols: Iterable[float | None] = itertools.repeat(None) if volumes is None else volumes
    bars = tuple(
        OhlcvBar(d, o, h, l, c, v)
        for d, o, h, l, c, v in zip(dates, opens, highs, lows, closes, vols)
    )
    return OhlcvSeries(symbol, bars)
