"""Convergence curves as a standalone SVG file.

Two log-scale panels: gradient norm against iterations and against
wall-clock time. Each algorithm gets its median as a polyline and the
10-90 percentile band as a translucent polygon.
"""

import math
from xml.sax.saxutils import escape

import numpy as np

from .runner import aggregate_curves

COLORS = {"picardo": "#1f77b4", "fastica": "#d62728"}
_FALLBACK = ("#2ca02c", "#9467bd", "#8c564b")

WIDTH, HEIGHT = 900, 420
PANEL_W, PANEL_H = 360, 270
MARGIN_L, MARGIN_T = 70, 40
GAP = 90


class _Axes:
    def __init__(self, x0, y0, xmin, xmax, ymin, ymax):
        self.x0, self.y0 = x0, y0
        self.xmin, self.xmax = xmin, xmax if xmax > xmin else xmin + 1.0
        self.lmin = math.floor(math.log10(ymin))
        self.lmax = math.ceil(math.log10(ymax))
        if self.lmax <= self.lmin:
            self.lmax = self.lmin + 1

    def px(self, x):
        return self.x0 + PANEL_W * (x - self.xmin) / (self.xmax - self.xmin)

    def py(self, y):
        ly = math.log10(max(y, 10.0**self.lmin))
        return self.y0 + PANEL_H * (1.0 - (ly - self.lmin) / (self.lmax - self.lmin))

    def points(self, xs, ys):
        return " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))


def _frame(ax, title, xlabel):
    x0, y0 = ax.x0, ax.y0
    parts = [
        f'<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#333"/>',
        f'<text x="{x0 + PANEL_W / 2}" y="{y0 - 12}" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{x0 + PANEL_W / 2}" y="{y0 + PANEL_H + 36}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="{x0 - 52}" y="{y0 + PANEL_H / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 {x0 - 52} {y0 + PANEL_H / 2})">||G - G^T||</text>',
    ]
    for p in range(ax.lmin, ax.lmax + 1):
        yy = ax.py(10.0**p)
        parts.append(f'<line x1="{x0}" y1="{yy:.2f}" x2="{x0 + PANEL_W}" y2="{yy:.2f}" stroke="#ddd"/>')
        parts.append(f'<text x="{x0 - 6}" y="{yy + 4:.2f}" text-anchor="end" font-size="10">1e{p}</text>')
    for frac in (0.0, 0.5, 1.0):
        xv = ax.xmin + frac * (ax.xmax - ax.xmin)
        parts.append(
            f'<text x="{ax.px(xv):.2f}" y="{y0 + PANEL_H + 16}" text-anchor="middle" font-size="10">{xv:.3g}</text>'
        )
    return parts


def _curves(ax, xs, med, lo, hi, color, name):
    band = ax.points(xs, hi) + " " + ax.points(xs[::-1], lo[::-1])
    return [
        f'<polygon points="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>',
        f'<polyline points="{ax.points(xs, med)}" fill="none" stroke="{color}" '
        f'stroke-width="2" data-algorithm="{escape(name)}"/>',
    ]


def render_svg(records, path=None):
    """Render convergence curves of `records`; write to `path` if given.

    Returns the SVG document as a string.
    """
    if not records:
        raise ValueError("render_svg needs at least one run record")
    agg = aggregate_curves(records)
    if not agg:
        raise ValueError("render_svg: no record has a trace")
    values = np.concatenate([np.r_[a["p10"], a["p90"], a["time_p10"], a["time_p90"]] for a in agg.values()])
    values = values[np.isfinite(values) & (values > 0)]
    ymin = float(values.min()) if values.size else 1e-10
    ymax = float(values.max()) if values.size else 1.0
    it_max = max(float(a["iter"][-1]) for a in agg.values())
    t_max = max(float(a["time"][-1]) for a in agg.values())

    ax_it = _Axes(MARGIN_L, MARGIN_T, 0.0, it_max, ymin, ymax)
    ax_t = _Axes(MARGIN_L + PANEL_W + GAP, MARGIN_T, 0.0, t_max, ymin, ymax)
    panel_it = _frame(ax_it, "Gradient norm vs iterations", "iteration")
    panel_t = _frame(ax_t, "Gradient norm vs time", "time (s)")
    legend = []
    for i, (name, a) in enumerate(agg.items()):
        color = COLORS.get(name, _FALLBACK[i % len(_FALLBACK)])
        panel_it += _curves(ax_it, a["iter"], a["median"], a["p10"], a["p90"], color, name)
        panel_t += _curves(ax_t, a["time"], a["time_median"], a["time_p10"], a["time_p90"], color, name)
        lx = MARGIN_L + 160 * i
        ly = HEIGHT - 22
        legend.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        legend.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="12">{escape(name)}</text>')
    body = (
        ['<g id="panel-iter">', *panel_it, "</g>", '<g id="panel-time">', *panel_t, "</g>"]
        + ['<g id="legend">', *legend, "</g>"]
    )

    doc = "\n".join(
        [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            '<rect width="100%" height="100%" fill="white"/>',
            *body,
            "</svg>",
            "",
        ]
    )
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(doc)
    return doc
