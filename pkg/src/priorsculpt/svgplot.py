"""Tiny self-contained SVG line charts.

Emits a single <svg> element with inline styling only, so report files can
be opened anywhere without scripts, fonts, or network access.  Just enough
plotting for the workbench: polylines, optional dashing, optional vertical
error bars, axis ticks, and a legend.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "line_chart", "write_chart"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2")

WIDTH, HEIGHT = 760, 460
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 20, 42, 54


@dataclass
class Series:
    """One polyline: x and y data, a label, and styling."""

    x: np.ndarray
    y: np.ndarray
    label: str = ""
    dashed: bool = False
    color: str | None = None
    err: np.ndarray | None = field(default=None)


def _nice_ticks(lo, hi, target=5):
    """1-2-5 tick positions covering [lo, hi]."""
    if not np.isfinite(lo) or not np.isfinite(hi):
        lo, hi = 0.0, 1.0
    if hi <= lo:
        hi = lo + (abs(lo) if lo != 0.0 else 1.0) * 1e-3
    span = hi - lo
    raw = span / max(target, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = np.ceil(lo / step) * step
    ticks = np.arange(first, hi + step * 0.5, step)
    return ticks[(ticks >= lo - 1e-12 * span) & (ticks <= hi + 1e-12 * span)]


def _fmt(v):
    """Short tick label; strips float noise."""
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.6g}"


def line_chart(series, *, title="", xlabel="", ylabel="") -> str:
    """Render the series to an SVG string."""
    series = list(series)
    xs = np.concatenate([np.asarray(s.x, dtype=float) for s in series]) if series else np.array([0.0, 1.0])
    ys_all = []
    for s in series:
        y = np.asarray(s.y, dtype=float)
        ys_all.append(y)
        if s.err is not None:
            e = np.asarray(s.err, dtype=float)
            ys_all.append(y + e)
            ys_all.append(y - e)
    ys = np.concatenate(ys_all) if ys_all else np.array([0.0, 1.0])
    x_lo, x_hi = float(np.min(xs)), float(np.max(xs))
    y_lo, y_hi = float(np.min(ys)), float(np.max(ys))
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + (abs(y_lo) if y_lo != 0.0 else 1.0) * 1e-3
    # A little headroom so lines do not sit on the frame.
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    px_w = WIDTH - MARGIN_L - MARGIN_R
    px_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * px_w

    def sy(v):
        return MARGIN_T + (y_hi - v) / (y_hi - y_lo) * px_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{px_w}" height="{px_h}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
    ]
    if title:
        parts.append(f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
                     f'font-size="15">{escape(title)}</text>')
    for t in _nice_ticks(x_lo, x_hi):
        x = sx(t)
        parts.append(f'<line x1="{x:.2f}" y1="{MARGIN_T + px_h}" x2="{x:.2f}" '
                     f'y2="{MARGIN_T + px_h + 5}" stroke="#444"/>')
        parts.append(f'<text x="{x:.2f}" y="{MARGIN_T + px_h + 19}" text-anchor="middle" '
                     f'font-size="11">{_fmt(t)}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        y = sy(t)
        parts.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.2f}" x2="{MARGIN_L}" '
                     f'y2="{y:.2f}" stroke="#444"/>')
        parts.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.2f}" text-anchor="end" '
                     f'font-size="11">{_fmt(t)}</text>')
    if xlabel:
        parts.append(f'<text x="{MARGIN_L + px_w / 2:.1f}" y="{HEIGHT - 14}" '
                     f'text-anchor="middle" font-size="13">{escape(xlabel)}</text>')
    if ylabel:
        y_mid = MARGIN_T + px_h / 2
        parts.append(f'<text x="18" y="{y_mid:.1f}" text-anchor="middle" font-size="13" '
                     f'transform="rotate(-90 18 {y_mid:.1f})">{escape(ylabel)}</text>')

    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        if s.err is not None:
            e = np.asarray(s.err, dtype=float)
            for xi, yi, ei in zip(x, y, e):
                x0, y1, y2 = sx(xi), sy(yi - ei), sy(yi + ei)
                parts.append(f'<line x1="{x0:.2f}" y1="{y1:.2f}" x2="{x0:.2f}" '
                             f'y2="{y2:.2f}" stroke="{color}" stroke-width="1"/>')
                for yy in (y1, y2):
                    parts.append(f'<line x1="{x0 - 3:.2f}" y1="{yy:.2f}" '
                                 f'x2="{x0 + 3:.2f}" y2="{yy:.2f}" '
                                 f'stroke="{color}" stroke-width="1"/>')
        pts = " ".join(f"{sx(xi):.2f},{sy(yi):.2f}" for xi, yi in zip(x, y))
        dash = ' stroke-dasharray="7,5"' if s.dashed else ""
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.8"{dash}/>')
        for xi, yi in zip(x, y):
            parts.append(f'<circle cx="{sx(xi):.2f}" cy="{sy(yi):.2f}" r="2.4" '
                         f'fill="{color}"/>')

    labeled = [(i, s) for i, s in enumerate(series) if s.label]
    if labeled:
        lx = MARGIN_L + px_w - 170
        ly = MARGIN_T + 10
        parts.append(f'<rect x="{lx - 8}" y="{ly - 4}" width="178" '
                     f'height="{16 * len(labeled) + 8}" fill="white" '
                     'fill-opacity="0.85" stroke="#999" stroke-width="0.5"/>')
        for row, (i, s) in enumerate(labeled):
            color = s.color or PALETTE[i % len(PALETTE)]
            yy = ly + 16 * row + 8
            dash = ' stroke-dasharray="7,5"' if s.dashed else ""
            parts.append(f'<line x1="{lx}" y1="{yy:.2f}" x2="{lx + 26}" y2="{yy:.2f}" '
                         f'stroke="{color}" stroke-width="1.8"{dash}/>')
            parts.append(f'<text x="{lx + 32}" y="{yy + 4:.2f}" font-size="11">'
                         f'{escape(s.label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_chart(path, series, **kwargs):
    """Render and write; returns the path."""
    svg = line_chart(series, **kwargs)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return path
