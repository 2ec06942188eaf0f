"""Aligned multi-instrument frames and the supervised-tensor pipeline.

An AlignedFrame is the inner join of several OHLCV series on trading dates:
strictly increasing dates, one float64 vector per ``<symbol>.<field>`` column,
no missing values. Everything here is a pure transformation; frames are never
mutated in place.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlignmentError,
    CsvFormatError,
    DegenerateColumnError,
    MissingColumnError,
    SplitError,
    WindowError,
)
from .ohlcv import OhlcvSeries

BAR_FIELDS = ("open", "high", "low", "close")


@dataclass(frozen=True)
class AlignedFrame:
    dates: tuple[dt.date, ...]
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise AlignmentError(f"dates not strictly increasing at {cur}")
        for name, values in self.columns.items():
            if len(values) != len(self.dates):
                raise AlignmentError(
                    f"column {name!r} has {len(values)} values for {len(self.dates)} dates"
                )

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(self.columns)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise MissingColumnError(f"no column {name!r}; have {list(self.columns)}") from None

    def select(self, names: list[str] | tuple[str, ...]) -> "AlignedFrame":
        return AlignedFrame(self.dates, {n: self.column(n) for n in names})

    def to_csv(self) -> str:
        header = "date," + ",".join(self.columns)
        rows = [header]
        mat = [self.columns[n] for n in self.columns]
        for i, d in enumerate(self.dates):
            rows.append(d.isoformat() + "," + ",".join(repr(float(col[i])) for col in mat))
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "AlignedFrame":
        lines = [ln for ln in str(text).splitlines() if ln.strip()]
        if not lines:
            raise CsvFormatError("empty frame document")
        header = [h.strip() for h in lines[0].split(",")]
        if not header or header[0].lower() != "date" or len(header) < 2:
            raise CsvFormatError(f"bad frame header {lines[0]!r}")
        names = header[1:]
        dates: list[dt.date] = []
        cols: list[list[float]] = [[] for _ in names]
        for line_no, line in enumerate(lines[1:], start=2):
            fields = line.split(",")
            if len(fields) != len(header):
                raise CsvFormatError(
                    f"line {line_no}: expected {len(header)} fields, got {len(fields)}"
                )
            try:
                dates.append(dt.date.fromisoformat(fields[0].strip()))
            except ValueError:
                raise CsvFormatError(f"line {line_no}: bad ISO date {fields[0]!r}") from None
            try:
                for col, f in zip(cols, fields[1:]):
                    col.append(float(f))
            except ValueError:
                raise CsvFormatError(f"line {line_no}: non-numeric value") from None
        columns = {n: np.asarray(c, dtype=np.float64) for n, c in zip(names, cols)}
        return cls(tuple(dates), columns)


def align(series_list: list[OhlcvSeries]) -> AlignedFrame:
    """Inner-join series on their common trading dates.

    Columns are ``<symbol>.<field>`` in input order; a volume column is added
    only when every bar of that series carries one.
    """
    if not series_list:
        raise AlignmentError("need at least one series")
    for s in series_list:
        if not s.bars:
            raise AlignmentError(f"series {s.symbol!r} is empty")
    common = set(series_list[0].dates)
    for s in series_list[1:]:
        common &= set(s.dates)
    if not common:
        raise AlignmentError("no common dates across series")
    dates = tuple(sorted(common))

    columns: dict[str, np.ndarray] = {}
    for s in series_list:
        by_date = {b.date: b for b in s.bars}
        picked = [by_date[d] for d in dates]
        for f in BAR_FIELDS:
            columns[f"{s.symbol}.{f}"] = np.asarray(
                [getattr(b, f) for b in picked], dtype=np.float64
            )
        if all(b.volume is not None for b in s.bars):
            columns[f"{s.symbol}.volume"] = np.asarray(
                [b.volume for b in picked], dtype=np.float64
            )
    return AlignedFrame(dates, columns)


def split_by_date(
    frame: AlignedFrame, train_last: dt.date, test_first: dt.date, test_last: dt.date
) -> tuple[AlignedFrame, AlignedFrame]:
    """Partition a frame into a training prefix and a bounded test window."""
    if not (train_last < test_first <= test_last):
        raise SplitError(
            f"need train_last < test_first <= test_last, got {train_last}, {test_first}, {test_last}"
        )
    train_ix = [i for i, d in enumerate(frame.dates) if d <= train_last]
    test_ix = [i for i, d in enumerate(frame.dates) if test_first <= d <= test_last]
    if not train_ix:
        raise SplitError(f"no dates on or before {train_last}")
    if not test_ix:
        raise SplitError(f"no dates in [{test_first}, {test_last}]")
    return _take(frame, train_ix), _take(frame, test_ix)


def _take(frame: AlignedFrame, indices: list[int]) -> AlignedFrame:
    dates = tuple(frame.dates[i] for i in indices)
    cols = {n: v[indices] for n, v in frame.columns.items()}
    return AlignedFrame(dates, cols)


@dataclass(frozen=True)
class ScalerParams:
    """Per-column min/max fitted on the training range only."""

    mins: dict[str, float]
    maxs: dict[str, float]
    degenerate: frozenset[str] = field(default_factory=frozenset)

    def to_dict(self) -> dict:
        return {
            "mins": dict(self.mins),
            "maxs": dict(self.maxs),
            "degenerate": sorted(self.degenerate),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(dict(d["mins"]), dict(d["maxs"]), frozenset(d.get("degenerate", [])))


def fit_scaler(frame: AlignedFrame) -> ScalerParams:
    """Record per-column extrema; constant columns are flagged degenerate."""
    mins, maxs, degenerate = {}, {}, set()
    for name, values in frame.columns.items():
        lo, hi = float(values.min()), float(values.max())
        mins[name], maxs[name] = lo, hi
        if lo == hi:
            degenerate.add(name)
    return ScalerParams(mins, maxs, frozenset(degenerate))


def apply_scaler(frame: AlignedFrame, params: ScalerParams) -> AlignedFrame:
    """Min-max scale every column; out-of-range values extrapolate unclipped."""
    cols: dict[str, np.ndarray] = {}
    for name, values in frame.columns.items():
        if name not in params.mins:
            raise MissingColumnError(f"scaler was not fitted for column {name!r}")
        if name in params.degenerate:
            raise DegenerateColumnError(f"column {name!r} is constant over the fit range")
        lo, hi = params.mins[name], params.maxs[name]
        cols[name] = (values - lo) / (hi - lo)
    return AlignedFrame(frame.dates, cols)


def invert_scaler(values: np.ndarray, column: str, params: ScalerParams) -> np.ndarray:
    """Map scaled values of one column back to the original scale."""
    if column not in params.mins:
        raise MissingColumnError(f"scaler was not fitted for column {column!r}")
    if column in params.degenerate:
        raise DegenerateColumnError(f"column {column!r} is constant over the fit range")
    lo, hi = params.mins[column], params.maxs[column]
    return np.asarray(values, dtype=np.float64) * (hi - lo) + lo


@dataclass(frozen=True)
class SupervisedTensors:
    """Lookback windows and next-step targets cut from one frame.

    inputs[i] covers the ``lookback`` dates immediately preceding
    sample_dates[i]; targets[i] is the target column at sample_dates[i].
    """

    inputs: np.ndarray  # [N, L, F]
    targets: np.ndarray  # [N]
    sample_dates: tuple[dt.date, ...]

    def __len__(self) -> int:
        return len(self.sample_dates)


def make_supervised_windows(
    frame: AlignedFrame,
    feature_columns: list[str] | tuple[str, ...],
    target_column: str,
    lookback: int,
) -> SupervisedTensors:
    if lookback < 1:
        raise WindowError(f"lookback must be >= 1, got {lookback}")
    if lookback >= len(frame):
        raise WindowError(f"lookback {lookback} needs more than {len(frame)} dates")
    features = np.column_stack([frame.column(n) for n in feature_columns])
    target = frame.column(target_column)
    n = len(frame) - lookback
    inputs = np.empty((n, lookback, features.shape[1]), dtype=np.float64)
    for i in range(n):
        inputs[i] = features[i : i + lookback]
    targets = target[lookback:].astype(np.float64, copy=True)
    return SupervisedTensors(inputs, targets, tuple(frame.dates[lookback:]))
