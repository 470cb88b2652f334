"""Static SVG output: critical-difference diagrams and score box plots.

Both renderers are deterministic (fixed layout, fixed number formatting), so
the same input always produces byte-identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .engine import ComparisonResults
from .exceptions import ConfigError
from .stats import BonferroniDunnResult, NemenyiResult


def _n(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if v != int(v) else str(int(v))


class _Svg:
    def __init__(self, width: int, height: int):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def line(self, x1, y1, x2, y2, width=1.0, color="black"):
        self.parts.append(f'<line x1="{_n(x1)}" y1="{_n(y1)}" x2="{_n(x2)}" y2="{_n(y2)}" '
                          f'stroke="{color}" stroke-width="{_n(width)}"/>')

    def rect(self, x, y, w, h, fill="none", color="black"):
        self.parts.append(f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(w)}" height="{_n(h)}" '
                          f'fill="{fill}" stroke="{color}"/>')

    def circle(self, x, y, r=2.5, fill="black"):
        self.parts.append(f'<circle cx="{_n(x)}" cy="{_n(y)}" r="{_n(r)}" fill="{fill}"/>')

    def text(self, x, y, s, anchor="start", size=12):
        self.parts.append(f'<text x="{_n(x)}" y="{_n(y)}" font-size="{size}" '
                          f'text-anchor="{anchor}">{escape(str(s))}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif">')
        return "\n".join([head, f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
                          *self.parts, "</svg>"]) + "\n"


def _save(svg: str, path) -> str:
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(svg)
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc}") from None
    return svg


# -- CD diagram ----------------------------------------------------------------

def cd_cliques(avg_rks, cd: float) -> list[tuple[int, int]]:
    """Maximal runs of rank-sorted workflows whose spread is within ``cd``.

    Returns ``(first, last)`` positions in ascending-rank order; runs of a
    single workflow are omitted and no run is contained in another.
    """
    r = np.sort(np.asarray(avg_rks, dtype=float))
    out: list[tuple[int, int]] = []
    for i in range(r.size):
        j = i
        while j + 1 < r.size and r[j + 1] - r[i] <= cd:
            j += 1
        if j > i and not (out and out[-1][1] >= j):
            out.append((i, j))
    return out


def cd_diagram(result: NemenyiResult | BonferroniDunnResult, path=None, width: int = 800) -> str:
    """Render the critical-difference diagram of a post-hoc test as SVG."""
    names = list(result.workflows)
    ranks = np.asarray(result.avg_rks, dtype=float)
    k = len(names)
    order = np.argsort(ranks, kind="stable")
    left, right = 160, width - 160
    lo, hi = 1, max(k, 2)

    def x(rank):
        return left + (rank - lo) / (hi - lo) * (right - left)

    half = math.ceil(k / 2)
    cliques = cd_cliques(ranks, result.crit_dif) if isinstance(result, NemenyiResult) else []
    axis_y = 70
    bar_y0 = axis_y + 18
    label_y0 = bar_y0 + 12 * len(cliques) + 20
    height = label_y0 + 18 * half + 20
    svg = _Svg(width, height)
    # CD ruler
    svg.line(x(1), 20, x(1 + result.crit_dif), 20, 2)
    svg.line(x(1), 15, x(1), 25)
    svg.line(x(1 + result.crit_dif), 15, x(1 + result.crit_dif), 25)
    svg.text(x(1), 12, f"CD = {result.crit_dif:.3f}", size=11)
    # rank axis
    svg.line(x(lo), axis_y, x(hi), axis_y, 1.5)
    for t in range(lo, hi + 1):
        svg.line(x(t), axis_y - 6, x(t), axis_y)
        svg.text(x(t), axis_y - 9, t, "middle", 11)
    if isinstance(result, BonferroniDunnResult):
        b = ranks[names.index(result.baseline)]
        a, z = max(lo, b - result.crit_dif), min(hi, b + result.crit_dif)
        svg.line(x(a), axis_y + 6, x(z), axis_y + 6, 4, "grey")
    for c, (i, j) in enumerate(cliques):
        y = bar_y0 + 12 * c
        svg.line(x(ranks[order[i]]) - 3, y, x(ranks[order[j]]) + 3, y, 3)
    for pos, idx in enumerate(order):
        rx = x(ranks[idx])
        if pos < half:
            y = label_y0 + 18 * pos
            svg.line(rx, axis_y, rx, y)
            svg.line(rx, y, left - 10, y)
            svg.text(left - 14, y + 4, f"{names[idx]} ({ranks[idx]:.2f})", "end", 11)
        else:
            y = label_y0 + 18 * (k - 1 - pos)
            svg.line(rx, axis_y, rx, y)
            svg.line(rx, y, right + 10, y)
            svg.text(right + 14, y + 4, f"({ranks[idx]:.2f}) {names[idx]}", "start", 11)
    return _save(svg.render(), path)


# -- box plots -----------------------------------------------------------------

def box_stats(values) -> dict:
    """Median, quartiles, 1.5 IQR whiskers and outliers of a score vector."""
    x = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    iqr = q3 - q1
    inside = x[(x >= q1 - 1.5 * iqr) & (x <= q3 + 1.5 * iqr)]
    return {"q1": float(q1), "med": float(med), "q3": float(q3),
            "lo": float(inside.min()), "hi": float(inside.max()),
            "outliers": [float(v) for v in x if v < inside.min() or v > inside.max()]}


def boxplot(results: ComparisonResults, path=None, metrics=None, panel_width: int = 360,
            panel_height: int = 260) -> str:
    """One panel per (task, metric), one box per workflow, every iteration as a dot."""
    metrics = list(metrics) if metrics else results.metrics
    panels = []
    for t in results.task_ids:
        for m in metrics:
            boxes = []
            for w in results.workflow_ids:
                vals = [r.scores[m] for r in results.cell(t, w)
                        if not r.invalid and r.scores and not math.isnan(r.scores.get(m, math.nan))]
                if vals:
                    boxes.append((w, np.asarray(vals)))
            if boxes:
                panels.append((t, m, boxes))
    if not panels:
        raise ConfigError("no valid scores to plot")
    cols = min(len(metrics), 3) or 1
    rows = math.ceil(len(panels) / cols)
    svg = _Svg(cols * panel_width, rows * panel_height)
    for p, (t, m, boxes) in enumerate(panels):
        ox, oy = (p % cols) * panel_width, (p // cols) * panel_height
        _panel(svg, ox, oy, panel_width, panel_height, f"{t} : {m}", boxes)
    return _save(svg.render(), path)


def _panel(svg: _Svg, ox, oy, w, h, title, boxes):
    top, bottom, left, right = oy + 30, oy + h - 45, ox + 55, ox + w - 15
    allv = np.concatenate([v for _, v in boxes])
    vmin, vmax = float(allv.min()), float(allv.max())
    if vmax == vmin:
        vmin, vmax = vmin - 0.5, vmax + 0.5
    pad = 0.05 * (vmax - vmin)
    vmin, vmax = vmin - pad, vmax + pad

    def y(v):
        return bottom - (v - vmin) / (vmax - vmin) * (bottom - top)

    svg.text(ox + w / 2, oy + 18, title, "middle", 12)
    svg.line(left, top, left, bottom)
    svg.line(left, bottom, right, bottom)
    for v in np.linspace(vmin + pad, vmax - pad, 5):
        svg.line(left - 4, y(v), left, y(v))
        svg.text(left - 6, y(v) + 4, f"{v:.4g}", "end", 9)
    slot = (right - left) / len(boxes)
    for i, (name, vals) in enumerate(boxes):
        cx = left + slot * (i + 0.5)
        half = min(slot * 0.3, 30)
        s = box_stats(vals)
        svg.rect(cx - half, y(s["q3"]), 2 * half, max(y(s["q1"]) - y(s["q3"]), 0.5))
        svg.line(cx - half, y(s["med"]), cx + half, y(s["med"]), 2)
        svg.line(cx, y(s["q3"]), cx, y(s["hi"]))
        svg.line(cx, y(s["q1"]), cx, y(s["lo"]))
        svg.line(cx - half / 2, y(s["hi"]), cx + half / 2, y(s["hi"]))
        svg.line(cx - half / 2, y(s["lo"]), cx + half / 2, y(s["lo"]))
        for v in s["outliers"]:
            svg.circle(cx, y(v), 3, "red")
        for j, v in enumerate(vals):
            offset = ((j % 5) - 2) * half / 5
            svg.circle(cx + offset, y(v), 1.6, "steelblue")
        svg.text(cx, bottom + 16, name, "middle", 10)
