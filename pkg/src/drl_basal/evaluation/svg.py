"""Static SVG figures: AGP bands, CVGA grids and training curves."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .cvga import X_RANGE, Y_RANGE

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
ZONE_FILL = {"A": "#2e8b57", "B": "#9acd32", "C": "#ffd700", "D": "#ff8c00", "E": "#cd3333"}
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 64, 150, 36, 48


def _f(v) -> str:
    return f"{float(v):.2f}"


class _Canvas:
    def __init__(self, title, xlim, ylim, xlabel, ylabel):
        self.xlim, self.ylim = xlim, ylim
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
            f'<text x="{LEFT + (W - LEFT - RIGHT) / 2}" y="{H - 10}" '
            f'text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="16" y="{TOP + (H - TOP - BOTTOM) / 2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {TOP + (H - TOP - BOTTOM) / 2})">{escape(ylabel)}</text>',
        ]
        self.legend = 0

    def x(self, v):
        a, b = self.xlim
        return LEFT + (v - a) / (b - a) * (W - LEFT - RIGHT)

    def y(self, v):
        a, b = self.ylim
        return H - BOTTOM - (v - a) / (b - a) * (H - TOP - BOTTOM)

    def add(self, s):
        self.parts.append(s)

    def rect(self, x0, y0, x1, y1, fill, opacity=1.0):
        xa, xb = sorted((self.x(x0), self.x(x1)))
        ya, yb = sorted((self.y(y0), self.y(y1)))
        self.add(f'<rect x="{_f(xa)}" y="{_f(ya)}" width="{_f(xb - xa)}" height="{_f(yb - ya)}" '
                 f'fill="{fill}" fill-opacity="{opacity}"/>')

    def polyline(self, xs, ys, color, width=1.5):
        pts = " ".join(f"{_f(self.x(a))},{_f(self.y(b))}" for a, b in zip(xs, ys))
        self.add(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def polygon(self, xs, ys, color, opacity):
        pts = " ".join(f"{_f(self.x(a))},{_f(self.y(b))}" for a, b in zip(xs, ys))
        self.add(f'<polygon points="{pts}" fill="{color}" fill-opacity="{opacity}" stroke="none"/>')

    def axes(self, xticks, yticks, xfmt=str, yfmt=str):
        x0, x1 = self.x(self.xlim[0]), self.x(self.xlim[1])
        y0, y1 = self.y(self.ylim[0]), self.y(self.ylim[1])
        self.add(f'<rect x="{_f(min(x0, x1))}" y="{_f(y1)}" width="{_f(abs(x1 - x0))}" '
                 f'height="{_f(y0 - y1)}" fill="none" stroke="black"/>')
        for t in xticks:
            px = _f(self.x(t))
            self.add(f'<line x1="{px}" y1="{_f(y0)}" x2="{px}" y2="{_f(y0 + 4)}" stroke="black"/>')
            self.add(f'<text x="{px}" y="{_f(y0 + 16)}" text-anchor="middle">{xfmt(t)}</text>')
        for t in yticks:
            py = _f(self.y(t))
            lx = min(x0, x1)
            self.add(f'<line x1="{_f(lx - 4)}" y1="{py}" x2="{_f(lx)}" y2="{py}" stroke="black"/>')
            self.add(f'<text x="{_f(lx - 6)}" y="{py}" text-anchor="end" '
                     f'dominant-baseline="middle">{yfmt(t)}</text>')

    def key(self, label, color):
        y = TOP + 10 + 18 * self.legend
        x = W - RIGHT + 12
        self.add(f'<rect x="{x}" y="{y - 6}" width="12" height="12" fill="{color}"/>')
        self.add(f'<text x="{x + 18}" y="{y}" dominant-baseline="middle">{escape(label)}</text>')
        self.legend += 1

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def agp_svg(profiles: dict, title: str = "Ambulatory glucose profile") -> str:
    """Mean line and 2.5-97.5 percentile band per controller over the day."""
    c = _Canvas(title, (0.0, 24.0), (0.0, 400.0), "Time of day (h)", "Glucose (mg/dL)")
    c.rect(0, 70, 24, 180, "#dddddd", 0.6)
    for i, (tag, prof) in enumerate(profiles.items()):
        color = PALETTE[i % len(PALETTE)]
        hours = (np.arange(prof.mean.size) + 1) * 5 / 60.0
        c.polygon(np.concatenate([hours, hours[::-1]]),
                  np.clip(np.concatenate([prof.p97_5, prof.p2_5[::-1]]), 0, 400), color, 0.18)
        c.polyline(hours, np.clip(prof.mean, 0, 400), color, 2.0)
        c.key(tag, color)
    c.axes(range(0, 25, 4), range(0, 401, 50))
    return c.render()


def cvga_svg(points: dict, title: str = "Control variability grid") -> str:
    """Zone grid with one marker per day; the x axis runs from 110 down to 50."""
    c = _Canvas(title, (X_RANGE[1], X_RANGE[0]), Y_RANGE, "Minimum BG (mg/dL)",
                "Maximum BG (mg/dL)")
    xs = (110, 90, 70, 50)
    ys = (110, 180, 300, 400)
    table = (("A", "B", "C"), ("B", "B", "D"), ("C", "D", "E"))
    for r in range(3):
        for k in range(3):
            c.rect(xs[k], ys[r], xs[k + 1], ys[r + 1], ZONE_FILL[table[r][k]], 0.35)
    for i, (tag, pts) in enumerate(points.items()):
        color = PALETTE[i % len(PALETTE)]
        for p in pts:
            c.add(f'<circle cx="{_f(c.x(p.x))}" cy="{_f(c.y(p.y))}" r="3" fill="{color}" '
                  f'fill-opacity="0.8"/>')
        c.key(tag, color)
    c.axes(xs, ys)
    return c.render()


def curve_svg(curves: dict, title: str, ylabel: str, xlabel: str = "Training step") -> str:
    """Line plot of ``{tag: (x, y)}`` series, e.g. training progress."""
    all_x = np.concatenate([np.asarray(x, float) for x, _ in curves.values()] or [np.zeros(1)])
    all_y = np.concatenate([np.asarray(y, float) for _, y in curves.values()] or [np.zeros(1)])
    all_y = all_y[np.isfinite(all_y)]
    x0, x1 = float(all_x.min()), float(all_x.max())
    y0, y1 = (float(all_y.min()), float(all_y.max())) if all_y.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    c = _Canvas(title, (x0, x1), (y0, y1), xlabel, ylabel)
    for i, (tag, (x, y)) in enumerate(curves.items()):
        color = PALETTE[i % len(PALETTE)]
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        ok = np.isfinite(y)
        c.polyline(x[ok], y[ok], color)
        c.key(tag, color)
    c.axes(np.linspace(x0, x1, 5), np.linspace(y0, y1, 5),
           lambda v: f"{v:.0f}", lambda v: f"{v:.3g}")
    return c.render()
