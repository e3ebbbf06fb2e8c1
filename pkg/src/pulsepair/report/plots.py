"""Self-contained SVG scatter plots with a CSV of the plotted points.

Rendering is hand-rolled with fixed number formatting so identical inputs
give identical bytes, which keeps plot output diffable in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 30, 80, 60


@dataclass(frozen=True)
class ScatterSeries:
    x: np.ndarray
    y: np.ndarray
    x_label: str
    y_label: str

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")

    def __len__(self):
        return len(self.x)


def nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / max(1, n - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e5 or abs(v) < 1e-3:
        return f"{v:.4g}"
    return f"{v:.10g}"


def render_svg(series: ScatterSeries, title: str, annotations=()) -> str:
    x, y = series.x, series.y
    xlo, xhi = float(x.min()), float(x.max())
    ylo, yhi = float(y.min()), float(y.max())
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    padx, pady = 0.04 * (xhi - xlo), 0.06 * (yhi - ylo)
    xlo, xhi, ylo, yhi = xlo - padx, xhi + padx, ylo - pady, yhi + pady
    pw, ph = WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return MARGIN_T + (yhi - v) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]
    for i, note in enumerate(annotations):
        out.append(f'<text x="{WIDTH / 2:.1f}" y="{40 + 15 * i}" text-anchor="middle">'
                   f'{escape(str(note))}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    for t in nice_ticks(xlo, xhi):
        px = _fmt(sx(t))
        out.append(f'<line x1="{px}" y1="{MARGIN_T + ph}" x2="{px}" y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px}" y="{MARGIN_T + ph + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in nice_ticks(ylo, yhi):
        py = _fmt(sy(t))
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{py}" x2="{MARGIN_L}" y2="{py}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{py}" text-anchor="end" dominant-baseline="middle">'
                   f'{_tick_label(t)}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">'
               f'{escape(series.x_label)}</text>')
    out.append(f'<text x="18" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.1f})">{escape(series.y_label)}</text>')
    out.append('<g fill="#1f4e9c" fill-opacity="0.75">')
    for xv, yv in zip(x.tolist(), y.tolist()):
        out.append(f'<circle cx="{_fmt(sx(xv))}" cy="{_fmt(sy(yv))}" r="3"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_scatter(series: ScatterSeries, out_stem, preset: str, trials: int,
                 annotations=(), title: str | None = None) -> tuple[Path, Path]:
    """Write ``<stem>.svg`` and ``<stem>.csv`` for one panel.

    The SVG carries the preset name and the trials count at the top, followed
    by any annotation lines. Returns the two paths.
    """
    if not len(series):
        raise ValueError("cannot plot an empty series")
    stem = Path(out_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    head = f"{preset}: {title}" if title else preset
    notes = [f"trials: {trials}", *annotations]
    svg_path, csv_path = stem.with_suffix(".svg"), stem.with_suffix(".csv")
    svg_path.write_text(render_svg(series, head, notes), encoding="utf-8")
    rows = [f"{series.x_label},{series.y_label}"]
    rows += [f"{xv:.10g},{yv:.10g}" for xv, yv in zip(series.x.tolist(), series.y.tolist())]
    csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return svg_path, csv_path
