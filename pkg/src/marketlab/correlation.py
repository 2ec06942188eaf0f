"""Pearson correlation machinery: full-period matrices, non-overlapping
windowed correlations with four-bin histograms and summary statistics, and
lag autocorrelation with a lookback suggestion.

Window semantics: a series is cut into consecutive non-overlapping chunks of
``window_len`` points; a trailing remainder shorter than the window is
dropped, and windows where either chunk is constant are excluded from the
correlation vector but reported through a skipped-window count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorrelationRangeError,
    DegenerateColumnError,
    DegenerateSeriesError,
    ShapeMismatchError,
    WindowError,
)
from .frame import AlignedFrame

HISTOGRAM_BINS = ((-1.0, -0.5), (-0.5, 0.0), (0.0, 0.5), (0.5, 1.0))


def pearson(x, y) -> float:
    """Sample Pearson coefficient of two equal-length, non-constant vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
        raise ShapeMismatchError(f"vectors of length {x.size} and {y.size}")
    if x.size < 2:
        raise ShapeMismatchError("need at least 2 points")
    # exact constancy check: rounding in the mean can leave a nonzero spread
    if np.all(x == x[0]):
        raise DegenerateSeriesError("first vector is constant")
    if np.all(y == y[0]):
        raise DegenerateSeriesError("second vector is constant")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        # spread so small the squared deviations underflow; numerically constant
        raise DegenerateSeriesError("vector is numerically constant")
    r = float(dx @ dy) / (sx * sy)
    # rounding can overshoot |r| = 1 by an ulp; keep the contract exact
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    values: np.ndarray

    def to_csv(self) -> str:
        rows = ["," + ",".join(self.labels)]
        for i, label in enumerate(self.labels):
            rows.append(label + "," + ",".join(repr(float(v)) for v in self.values[i]))
        return "\n".join(rows) + "\n"


def correlation_matrix(frame: AlignedFrame, columns: list[str] | None = None) -> CorrelationMatrix:
    """Pairwise Pearson matrix over the given frame columns (all by default)."""
    names = list(columns) if columns is not None else list(frame.column_names)
    if len(names) < 2:
        raise ShapeMismatchError("need at least 2 columns")
    vectors = [frame.column(n) for n in names]
    k = len(names)
    values = np.eye(k, dtype=np.float64)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                r = pearson(vectors[i], vectors[j])
            except DegenerateSeriesError:
                bad = names[i] if float(np.ptp(vectors[i])) == 0.0 else names[j]
                raise DegenerateColumnError(f"column {bad!r} is constant") from None
            values[i, j] = values[j, i] = r
    return CorrelationMatrix(tuple(names), values)


def discretize_windows(values, window_len: int) -> list[np.ndarray]:
    """Cut a vector into consecutive non-overlapping chunks, dropping the tail."""
    if window_len < 2:
        raise WindowError(f"window_len must be >= 2, got {window_len}")
    values = np.asarray(values, dtype=np.float64)
    n_windows = values.size // window_len
    return [values[i * window_len : (i + 1) * window_len] for i in range(n_windows)]


@dataclass(frozen=True)
class SummaryStats:
    median: float
    mean: float
    variance: float
    std_dev: float


def summary_stats(rs, sample: bool = False) -> SummaryStats:
    """Median/mean/variance/std of a non-empty vector.

    Variance divides by n (population form) unless ``sample`` selects n-1.
    """
    rs = np.asarray(rs, dtype=np.float64)
    if rs.size == 0:
        raise ShapeMismatchError("empty input")
    if sample and rs.size < 2:
        raise ShapeMismatchError("sample variance needs at least 2 points")
    mean = float(rs.mean())
    dev = rs - mean
    variance = float(dev @ dev) / (rs.size - 1 if sample else rs.size)
    return SummaryStats(
        median=float(np.median(rs)),
        mean=mean,
        variance=variance,
        std_dev=math.sqrt(variance),
    )


def bucket_histogram(rs) -> tuple[tuple[int, int, int, int], tuple[float, float, float, float]]:
    """Counts and percents over the four bins [-1,-0.5), [-0.5,0), [0,0.5), [0.5,1].

    Exactly 1.0 falls in the last bin so every legal value is binned once.
    """
    rs = np.asarray(rs, dtype=np.float64)
    counts = [0, 0, 0, 0]
    for r in rs:
        if not -1.0 <= r <= 1.0:
            raise CorrelationRangeError(f"value {r!r} outside [-1, 1]")
        if r < -0.5:
            counts[0] += 1
        elif r < 0.0:
            counts[1] += 1
        elif r < 0.5:
            counts[2] += 1
        else:
            counts[3] += 1
    total = rs.size
    percents = tuple(100.0 * c / total if total else 0.0 for c in counts)
    return tuple(counts), percents  # type: ignore[return-value]


@dataclass(frozen=True)
class WindowedCorrelationReport:
    pair: tuple[str, str]
    window_len: int
    window_indices: tuple[int, ...]
    window_correlations: np.ndarray
    skipped_windows: int
    counts: tuple[int, int, int, int]
    percents: tuple[float, float, float, float]
    stats: SummaryStats | None

    @property
    def total_windows(self) -> int:
        return len(self.window_indices) + self.skipped_windows


def windowed_correlations(
    a, b, window_len: int, pair: tuple[str, str] = ("a", "b")
) -> WindowedCorrelationReport:
    """Per-window Pearson over paired non-overlapping chunks of two vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size != b.size:
        raise ShapeMismatchError(f"vectors of length {a.size} and {b.size}")
    chunks_a = discretize_windows(a, window_len)
    chunks_b = discretize_windows(b, window_len)
    indices: list[int] = []
    correlations: list[float] = []
    skipped = 0
    for i, (ca, cb) in enumerate(zip(chunks_a, chunks_b)):
        try:
            correlations.append(pearson(ca, cb))
        except DegenerateSeriesError:
            skipped += 1
            continue
        indices.append(i)
    rs = np.asarray(correlations, dtype=np.float64)
    counts, percents = bucket_histogram(rs)
    stats = summary_stats(rs) if rs.size else None
    return WindowedCorrelationReport(
        pair=pair,
        window_len=window_len,
        window_indices=tuple(indices),
        window_correlations=rs,
        skipped_windows=skipped,
        counts=counts,
        percents=percents,
        stats=stats,
    )


@dataclass(frozen=True)
class AcfReport:
    series: str
    acf: np.ndarray  # index k holds the lag-k autocorrelation, k = 0..max_lag


def autocorrelation(values, max_lag: int, name: str = "series") -> AcfReport:
    """Pearson correlation of a vector with its k-step shift for k = 0..max_lag."""
    values = np.asarray(values, dtype=np.float64)
    if max_lag < 1:
        raise WindowError(f"max_lag must be >= 1, got {max_lag}")
    if values.size <= max_lag + 1:
        raise WindowError(f"series of {values.size} points is too short for max_lag {max_lag}")
    acf = np.empty(max_lag + 1, dtype=np.float64)
    acf[0] = pearson(values, values)
    for k in range(1, max_lag + 1):
        acf[k] = pearson(values[:-k], values[k:])
    return AcfReport(name, acf)


def select_lookback(report: AcfReport, threshold: float) -> int:
    """Longest prefix of lags whose autocorrelation stays at or above threshold.

    Returns 1 when even lag 1 falls below; the caller is expected to surface
    the full ACF next to the suggestion so a human can override it.
    """
    if not 0.0 < threshold < 1.0:
        raise WindowError(f"threshold must be in (0, 1), got {threshold}")
    lookback = 0
    for k in range(1, len(report.acf)):
        if report.acf[k] >= threshold:
            lookback = k
        else:
            break
    return max(lookback, 1)


def windowed_csv(reports: list[WindowedCorrelationReport]) -> str:
    """Per-window correlations as ``pair,window_index,correlation`` rows."""
    rows = ["pair,window_index,correlation"]
    for rep in reports:
        label = f"{rep.pair[0]}-{rep.pair[1]}"
        for idx, r in zip(rep.window_indices, rep.window_correlations):
            rows.append(f"{label},{idx},{float(r)!r}")
    return "\n".join(rows) + "\n"


def summary_csv(reports: list[WindowedCorrelationReport]) -> str:
    """One row per pair with median/mean/variance/std plus bookkeeping counts."""
    rows = ["pair,median,mean,variance,std_dev,windows,skipped_windows"]
    for rep in reports:
        label = f"{rep.pair[0]}-{rep.pair[1]}"
        s = rep.stats
        if s is None:
            rows.append(f"{label},,,,,0,{rep.skipped_windows}")
        else:
            rows.append(
                f"{label},{s.median!r},{s.mean!r},{s.variance!r},{s.std_dev!r},"
                f"{len(rep.window_indices)},{rep.skipped_windows}"
            )
    return "\n".join(rows) + "\n"
