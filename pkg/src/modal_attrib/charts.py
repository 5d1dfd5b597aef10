"""Static SVG charts rendered from exported plot data (forest, beeswarm, quadrant)."""

from __future__ import annotations

from collections import defaultdict
from html import escape
from pathlib import Path
from typing import Sequence

import numpy as np

FONT = 'font-family="sans-serif" font-size="11"'
LOW, HIGH = (30, 136, 229), (255, 13, 87)


def _color(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    r, g, b = (round(lo + t * (hi - lo)) for lo, hi in zip(LOW, HIGH))
    return f"#{r:02x}{g:02x}{b:02x}"


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


class _Canvas:
    def __init__(self, width: int, height: int):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self, x: float, y: float, s: str, anchor: str = "start", extra: str = "") -> None:
        self.add(f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" {FONT}{extra}>{escape(s)}</text>')

    def line(self, x1, y1, x2, y2, stroke="#333", extra: str = "") -> None:
        self.add(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" stroke="{stroke}"{extra}/>')

    def circle(self, x, y, r, fill) -> None:
        self.add(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{fill}"/>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        return "\n".join([head, f'<rect width="{self.width}" height="{self.height}" fill="white"/>', *self.parts, "</svg>"]) + "\n"


def _scale(lo: float, hi: float, a: float, b: float):
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    return lambda v: a + (v - lo) / (hi - lo) * (b - a)


def forest_svg(rows: Sequence[dict], title: str = "feature-weighted SHAP") -> str:
    """``rows``: dicts with feature, beta_shap and optional ci_lo / ci_hi, drawn top to bottom."""
    left, right, top, step = 200, 40, 40, 20
    c = _Canvas(640, top + step * max(len(rows), 1) + 40)
    c.text(c.width / 2, 20, title, "middle")
    vals = [v for r in rows for v in (r["beta_shap"], r.get("ci_lo"), r.get("ci_hi")) if v is not None] or [0.0]
    lo, hi = min(min(vals), 0.0), max(max(vals), 0.0)
    pad = 0.05 * (hi - lo or 1.0)
    sx = _scale(lo - pad, hi + pad, left, c.width - right)
    bottom = top + step * len(rows)
    c.line(sx(0.0), top - 5, sx(0.0), bottom, "#999", ' stroke-dasharray="3,3"')
    for k, r in enumerate(rows):
        y = top + step * k + step / 2
        c.text(left - 8, y + 4, r["feature"], "end")
        if r.get("ci_lo") is not None and r.get("ci_hi") is not None:
            c.line(sx(r["ci_lo"]), y, sx(r["ci_hi"]), y, "#555")
        c.circle(sx(r["beta_shap"]), y, 4, "#d62728" if r["beta_shap"] >= 0 else "#1f77b4")
    c.line(left, bottom + 5, c.width - right, bottom + 5)
    for v in (lo - pad, 0.0, hi + pad):
        c.text(sx(v), bottom + 20, _fmt(v), "middle")
    return c.render()


def beeswarm_svg(records: Sequence[dict], max_points: int = 400, title: str = "SHAP values") -> str:
    """One row per feature in record order; colour encodes the 0-100 feature value.

    Points are stacked within phi bins so the layout is deterministic.
    """
    by_feature: dict[str, list[dict]] = defaultdict(list)
    for rec in records:
        by_feature[rec["feature"]].append(rec)
    names = list(by_feature)
    left, right, top, band = 200, 40, 40, 36
    c = _Canvas(700, top + band * max(len(names), 1) + 40)
    c.text(c.width / 2, 20, title, "middle")
    phis = [r["phi"] for r in records] or [0.0]
    sx = _scale(min(phis), max(phis), left, c.width - right)
    bottom = top + band * len(names)
    c.line(sx(0.0), top - 5, sx(0.0), bottom, "#999", ' stroke-dasharray="3,3"')
    for k, name in enumerate(names):
        recs = by_feature[name]
        if len(recs) > max_points:
            keep = np.linspace(0, len(recs) - 1, max_points).round().astype(int)
            recs = [recs[i] for i in keep]
        yc = top + band * k + band / 2
        c.text(left - 8, yc + 4, name, "end")
        fill: dict[int, int] = defaultdict(int)
        for rec in recs:
            x = sx(rec["phi"])
            b = int(x // 3)
            j = fill[b]
            fill[b] += 1
            offset = ((j + 1) // 2) * 2.0 * (1 if j % 2 else -1)
            offset = max(min(offset, band / 2 - 3), -(band / 2 - 3))
            c.circle(x, yc + offset, 1.6, _color(rec["feature_value"] / 100.0))
    c.line(left, bottom + 5, c.width - right, bottom + 5)
    for v in (min(phis), 0.0, max(phis)):
        c.text(sx(v), bottom + 20, _fmt(v), "middle")
    c.text(c.width - right, bottom + 34, "colour: feature value (blue low, red high)", "end")
    return c.render()


def quadrant_svg(points: Sequence[dict], summary: dict, response: str = "joint", max_points: int = 2000) -> str:
    """Scatter of the pair's raw values coloured by the response, split at the thresholds."""
    size, pad = 420, 50
    c = _Canvas(size + 2 * pad, size + 2 * pad + 30)
    fx, fy = summary["feature_x"], summary["feature_y"]
    c.text(c.width / 2, 20, f"{fx} x {fy}: {summary['pattern']}", "middle")
    sx = _scale(0.0, 100.0, pad, pad + size)
    sy = _scale(0.0, 100.0, pad + size, pad)
    c.add(f'<rect x="{pad}" y="{pad}" width="{size}" height="{size}" fill="none" stroke="#333"/>')
    if len(points) > max_points:
        keep = np.linspace(0, len(points) - 1, max_points).round().astype(int)
        points = [points[i] for i in keep]
    zs = [p[response] for p in points] or [0.0]
    zmax = max(abs(min(zs)), abs(max(zs))) or 1.0
    for p in points:
        c.circle(sx(p["x"]), sy(p["y"]), 1.8, _color(0.5 + 0.5 * p[response] / zmax))
    x0, y0 = summary["x0"], summary["y0"]
    c.line(sx(x0), pad, sx(x0), pad + size, "#000", ' stroke-dasharray="4,3"')
    c.line(pad, sy(y0), pad + size, sy(y0), "#000", ' stroke-dasharray="4,3"')
    centers = {"(-,-)": (25, 25), "(-,+)": (25, 75), "(+,-)": (75, 25), "(+,+)": (75, 75)}
    for q, beta in summary["betas"].items():
        cx, cy = centers[q]
        label = "n/a" if beta is None else f"{q} b={beta:.3f}"
        c.text(sx(cx), sy(cy), label, "middle", ' font-weight="bold"')
    c.text(c.width / 2, pad + size + 30, fx, "middle")
    c.text(15, pad + size / 2, fy, "middle", f' transform="rotate(-90 15 {_fmt(pad + size / 2)})"')
    return c.render()


def write_svg(svg: str, path: str | Path) -> None:
    Path(path).write_text(svg, encoding="utf-8")
