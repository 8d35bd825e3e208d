"""Minimal SVG canvas with a data-to-pixel transform."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

CLASS_COLORS = ("#1f4e9c", "#c0392b")


def prob_color(p: float) -> str:
    """Blue (0) through white (0.5) to red (1)."""
    p = min(max(float(p), 0.0), 1.0)
    lo = np.array([31, 78, 156])
    hi = np.array([192, 57, 43])
    white = np.array([255, 255, 255])
    if p < 0.5:
        c = lo + (white - lo) * (p / 0.5)
    else:
        c = white + (hi - white) * ((p - 0.5) / 0.5)
    r, g, b = (int(round(v)) for v in c)
    return f"#{r:02x}{g:02x}{b:02x}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    span = hi - lo
    raw = span / max(count, 1)
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step * 1e-9, step) + 0.0


def step_of(lo: float, hi: float) -> float:
    ticks = _nice_ticks(lo, hi)
    return float(ticks[1] - ticks[0]) if len(ticks) > 1 else 1.0


def _tick_label(t: float, step: float) -> str:
    # snap float noise such as -2.2e-17 to zero
    if abs(t) < 1e-9 * step:
        t = 0.0
    return f"{t:g}"


class Canvas:
    """Plot area of ``width x height`` pixels showing ``bounds = (xmin, xmax, ymin, ymax)``."""

    def __init__(self, bounds, width: int = 480, height: int = 480, margin: int = 48, title: str = ""):
        self.xmin, self.xmax, self.ymin, self.ymax = map(float, bounds)
        self.width = width
        self.height = height
        self.margin = margin
        self.title = title
        self._body: list[str] = []
        self._clips = 0

    @property
    def plot_w(self) -> float:
        return self.width - 2 * self.margin

    @property
    def plot_h(self) -> float:
        return self.height - 2 * self.margin

    def px(self, x, y):
        sx = self.margin + (np.asarray(x) - self.xmin) / (self.xmax - self.xmin) * self.plot_w
        sy = self.margin + (self.ymax - np.asarray(y)) / (self.ymax - self.ymin) * self.plot_h
        return sx, sy

    def scale(self, dx: float, dy: float) -> tuple[float, float]:
        return dx / (self.xmax - self.xmin) * self.plot_w, dy / (self.ymax - self.ymin) * self.plot_h

    def add(self, raw: str):
        self._body.append(raw)

    def rect(self, x0, y0, x1, y1, fill, **attrs):
        (a, b), (c, d) = self.px(x0, y1), self.px(x1, y0)
        extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
        self.add(f'<rect x="{a:.2f}" y="{b:.2f}" width="{c - a:.2f}" height="{d - b:.2f}" fill="{fill}"{extra}/>')

    def polyline(self, xs, ys, stroke="#333", width=1.0, **attrs):
        sx, sy = self.px(xs, ys)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx, sy))
        extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
        self.add(f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>')

    def polygon(self, xs, ys, fill, **attrs):
        sx, sy = self.px(xs, ys)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx, sy))
        extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
        self.add(f'<polygon points="{pts}" fill="{fill}" stroke="none"{extra}/>')

    def circle(self, x, y, r=2.5, fill="#000", stroke="#111", width=0.6):
        sx, sy = self.px(x, y)
        self.add(f'<circle cx="{sx:.2f}" cy="{sy:.2f}" r="{r}" fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>')

    def arrow(self, x, y, dx, dy, stroke="#222", width=1.0):
        """Arrow from (x, y) with a pixel-space offset (dx, dy); y points up."""
        sx, sy = self.px(x, y)
        ex, ey = sx + dx, sy - dy
        length = float(np.hypot(dx, dy))
        if length < 1e-3:
            return
        self.add(f'<line x1="{sx:.2f}" y1="{sy:.2f}" x2="{ex:.2f}" y2="{ey:.2f}" stroke="{stroke}" stroke-width="{width}"/>')
        head = min(4.0, 0.4 * length)
        ux, uy = (ex - sx) / length, (ey - sy) / length
        lx, ly = ex - head * (ux - 0.5 * uy), ey - head * (uy + 0.5 * ux)
        rx, ry = ex - head * (ux + 0.5 * uy), ey - head * (uy - 0.5 * ux)
        self.add(f'<polygon points="{ex:.2f},{ey:.2f} {lx:.2f},{ly:.2f} {rx:.2f},{ry:.2f}" fill="{stroke}"/>')

    def text(self, sx, sy, s, size=11, anchor="middle", **attrs):
        extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
        self.add(
            f'<text x="{sx:.2f}" y="{sy:.2f}" font-size="{size}" font-family="sans-serif" '
            f'text-anchor="{anchor}"{extra}>{escape(str(s))}</text>'
        )

    def axes(self, xlabel="x1", ylabel="x2"):
        m = self.margin
        self.add(f'<rect x="{m}" y="{m}" width="{self.plot_w}" height="{self.plot_h}" fill="none" stroke="#000"/>')
        for t in _nice_ticks(self.xmin, self.xmax):
            sx, _ = self.px(t, self.ymin)
            self.add(f'<line x1="{sx:.2f}" y1="{m + self.plot_h}" x2="{sx:.2f}" y2="{m + self.plot_h + 4}" stroke="#000"/>')
            self.text(sx, m + self.plot_h + 16, _tick_label(t, step_of(self.xmin, self.xmax)), size=10)
        for t in _nice_ticks(self.ymin, self.ymax):
            _, sy = self.px(self.xmin, t)
            self.add(f'<line x1="{m - 4}" y1="{sy:.2f}" x2="{m}" y2="{sy:.2f}" stroke="#000"/>')
            self.text(m - 6, sy + 3, _tick_label(t, step_of(self.ymin, self.ymax)), size=10, anchor="end")
        self.text(m + self.plot_w / 2, self.height - 8, xlabel)
        self.text(12, m + self.plot_h / 2, ylabel, transform=f"rotate(-90 12 {m + self.plot_h / 2:.2f})")
        if self.title:
            self.text(self.width / 2, m / 2, self.title, size=13)

    def clip_begin(self):
        m = self.margin
        self._clips += 1
        cid = f"plot{self._clips}"
        self.add(
            f'<clipPath id="{cid}"><rect x="{m}" y="{m}" width="{self.plot_w}" height="{self.plot_h}"/></clipPath>'
            f'<g clip-path="url(#{cid})">'
        )

    def clip_end(self):
        self.add("</g>")

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect width="{self.width}" height="{self.height}" fill="#fff"/>\n'
        )
        return head + "\n".join(self._body) + "\n</svg>\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())
