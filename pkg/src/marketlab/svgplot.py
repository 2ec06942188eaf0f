"""Hand-rolled SVG writers: correlation heatmap and real-vs-predicted chart.

No plotting library is used so the byte output is a pure function of the
input data: exporting the same matrix or series twice yields identical files.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

from .correlation import CorrelationMatrix

# dark navy for r = -1, pale yellow for r = +1 (lighter = more positive)
_DARK = (13, 27, 76)
_LIGHT = (255, 252, 205)


def _cell_color(r: float) -> tuple[str, str]:
    t = (min(1.0, max(-1.0, r)) + 1.0) / 2.0
    rgb = tuple(round(d + t * (l - d)) for d, l in zip(_DARK, _LIGHT))
    fill = f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"
    text = "#ffffff" if t < 0.45 else "#1c1c1c"
    return fill, text


def heatmap_svg(matrix: CorrelationMatrix, title: str = "") -> str:
    """Annotated heatmap grid; cell labels carry the exact (repr) values."""
    labels = matrix.labels
    k = len(labels)
    cell_w, cell_h = 92, 46
    left, top = 150, 96 if title else 76
    width = left + k * cell_w + 20
    height = top + k * cell_h + 30

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>\n',
    ]
    if title:
        parts.append(
            f'<text x="{left}" y="28" font-family="monospace" font-size="15" '
            f'fill="#1c1c1c">{title}</text>\n'
        )
    for j, label in enumerate(labels):
        x = left + j * cell_w + cell_w // 2
        parts.append(
            f'<text x="{x}" y="{top - 10}" font-family="monospace" font-size="11" '
            f'fill="#1c1c1c" text-anchor="end" '
            f'transform="rotate(-35 {x} {top - 10})">{label}</text>\n'
        )
    for i, label in enumerate(labels):
        y = top + i * cell_h + cell_h // 2 + 4
        parts.append(
            f'<text x="{left - 8}" y="{y}" font-family="monospace" font-size="11" '
            f'fill="#1c1c1c" text-anchor="end">{label}</text>\n'
        )
        for j in range(k):
            r = float(matrix.values[i, j])
            fill, text_color = _cell_color(r)
            x = left + j * cell_w
            y0 = top + i * cell_h
            parts.append(
                f'<rect x="{x}" y="{y0}" width="{cell_w}" height="{cell_h}" '
                f'fill="{fill}" stroke="#ffffff" stroke-width="1"/>\n'
            )
            parts.append(
                f'<text x="{x + cell_w // 2}" y="{y0 + cell_h // 2 + 4}" '
                f'font-family="monospace" font-size="10" fill="{text_color}" '
                f'text-anchor="middle">{r!r}</text>\n'
            )
    parts.append("</svg>\n")
    return "".join(parts)


def export_heatmap(matrix: CorrelationMatrix, path, title: str = "") -> Path:
    """Write the heatmap SVG for a matrix; same matrix -> identical bytes."""
    path = Path(path)
    path.write_bytes(heatmap_svg(matrix, title=title).encode("utf-8"))
    return path


_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def line_chart_svg(
    dates: tuple[dt.date, ...] | list[dt.date],
    series: dict[str, np.ndarray],
    title: str = "",
) -> str:
    """Labeled polylines over a shared date axis, fixed-format coordinates."""
    n = len(dates)
    if n == 0 or not series:
        raise ValueError("need at least one date and one series")
    width, height = 960, 440
    left, right, top, bottom = 80, 24, 48, 56
    plot_w, plot_h = width - left - right, height - top - bottom

    lo = min(float(np.min(v)) for v in series.values())
    hi = max(float(np.max(v)) for v in series.values())
    if hi == lo:
        hi, lo = hi + 0.5, lo - 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def x_at(i: int) -> float:
        return left + (plot_w * i / (n - 1) if n > 1 else plot_w / 2)

    def y_at(v: float) -> float:
        return top + plot_h * (1.0 - (v - lo) / (hi - lo))

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>\n',
    ]
    if title:
        parts.append(
            f'<text x="{left}" y="26" font-family="monospace" font-size="14" '
            f'fill="#1c1c1c">{title}</text>\n'
        )
    parts.append(
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#888888" stroke-width="1"/>\n'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        y = y_at(v)
        parts.append(
            f'<line x1="{left}" y1="{y:.2f}" x2="{left + plot_w}" y2="{y:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>\n'
        )
        parts.append(
            f'<text x="{left - 6}" y="{y + 4:.2f}" font-family="monospace" font-size="10" '
            f'fill="#1c1c1c" text-anchor="end">{v:.6g}</text>\n'
        )
    tick_count = min(6, n)
    for k in range(tick_count):
        i = round(k * (n - 1) / (tick_count - 1)) if tick_count > 1 else 0
        x = x_at(i)
        parts.append(
            f'<text x="{x:.2f}" y="{top + plot_h + 18}" font-family="monospace" '
            f'font-size="10" fill="#1c1c1c" text-anchor="middle">{dates[i].isoformat()}</text>\n'
        )
    for s_idx, (name, values) in enumerate(series.items()):
        color = _SERIES_COLORS[s_idx % len(_SERIES_COLORS)]
        pts = " ".join(f"{x_at(i):.2f},{y_at(float(v)):.2f}" for i, v in enumerate(values))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>\n'
        )
        lx = left + plot_w - 150
        ly = top + 16 + 16 * s_idx
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>\n'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="monospace" font-size="11" '
            f'fill="#1c1c1c">{name}</text>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts)
