"""Small deterministic SVG line/scatter plots with optional log axes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from html import escape

import numpy as np

from .errors import DomainError

# below this a log axis would need ticks that underflow to zero
_LOG_FLOOR = 1e-300

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str
    color: str
    style: str  # "points", "line" or "dashed"


@dataclass
class Figure:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xlog: bool = False
    ylog: bool = False
    width: int = 480
    height: int = 360
    series: list = field(default_factory=list)

    def _add(self, x, y, label, color, style):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise DomainError("x and y must have the same shape")
        keep = np.isfinite(x) & np.isfinite(y)
        if self.xlog:
            keep &= x > _LOG_FLOOR
        if self.ylog:
            keep &= y > _LOG_FLOOR
        color = color or PALETTE[len(self.series) % len(PALETTE)]
        self.series.append(Series(x[keep], y[keep], label, color, style))

    def points(self, x, y, label="", color=None):
        self._add(x, y, label, color, "points")

    def line(self, x, y, label="", color=None, dashed=False):
        self._add(x, y, label, color, "dashed" if dashed else "line")

    def _range(self, axis, log):
        vals = np.concatenate([getattr(s, axis) for s in self.series if getattr(s, axis).size] or [np.array([1.0])])
        lo, hi = float(vals.min()), float(vals.max())
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.03 * (hi - lo)
        return lo - pad, hi + pad

    def render(self) -> str:
        ml, mr, mt, mb = 60, 20, 30, 45
        pw, ph = self.width - ml - mr, self.height - mt - mb
        (x0, x1), (y0, y1) = self._range("x", self.xlog), self._range("y", self.ylog)

        def px(v):
            v = math.log10(v) if self.xlog else v
            return ml + (v - x0) / (x1 - x0) * pw

        def py(v):
            v = math.log10(v) if self.ylog else v
            return mt + ph - (v - y0) / (y1 - y0) * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
               f'font-family="sans-serif" font-size="11">',
               f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
               f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
        for v in _ticks(x0, x1, self.xlog):
            x = px(v)
            out.append(f'<line x1="{x:.2f}" y1="{mt + ph}" x2="{x:.2f}" y2="{mt + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{mt + ph + 16}" text-anchor="middle">{_fmt(v)}</text>')
        for v in _ticks(y0, y1, self.ylog):
            y = py(v)
            out.append(f'<line x1="{ml - 4}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" stroke="black"/>')
            out.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end">{_fmt(v)}</text>')
        out.append(f'<text x="{ml + pw / 2:.2f}" y="{mt - 10}" text-anchor="middle" font-size="13">'
                   f'{escape(self.title)}</text>')
        out.append(f'<text x="{ml + pw / 2:.2f}" y="{self.height - 8}" text-anchor="middle">'
                   f'{escape(self.xlabel)}</text>')
        out.append(f'<text x="14" y="{mt + ph / 2:.2f}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {mt + ph / 2:.2f})">{escape(self.ylabel)}</text>')
        for s in self.series:
            coords = [(px(a), py(b)) for a, b in zip(s.x, s.y)]
            if s.style == "points":
                out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="1.8" fill="{s.color}"/>' for a, b in coords)
            elif coords:
                dash = ' stroke-dasharray="5,3"' if s.style == "dashed" else ""
                pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in coords)
                out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="1.5"{dash}/>')
        labelled = [s for s in self.series if s.label]
        for i, s in enumerate(labelled):
            y = mt + 12 + 14 * i
            out.append(f'<rect x="{ml + 8}" y="{y - 8}" width="10" height="4" fill="{s.color}"/>')
            out.append(f'<text x="{ml + 22}" y="{y - 3}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.render())


def _ticks(lo, hi, log):
    if log:
        return [10.0 ** e for e in range(math.ceil(lo), math.floor(hi) + 1)]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / 5))
    for m in (1, 2, 5, 10):
        if span / (m * step) <= 6:
            step *= m
            break
    start = math.ceil(lo / step)
    return [k * step for k in range(start, math.floor(hi / step) + 1)]


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.0e}"
    return f"{v:.4g}"
