"""Minimal deterministic SVG charts: bar, line and heatmap."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import ContractError

KINDS = ("bar", "line", "heatmap")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 60


@dataclass
class ChartSpec:
    kind: str
    series: dict
    x_label: str = ""
    y_label: str = ""
    categories: list | None = None
    title: str = ""
    x_values: list | None = field(default=None)  # line charts; defaults to 0..n-1

    def validate(self) -> int:
        if self.kind not in KINDS:
            raise ContractError(f"unknown chart kind {self.kind!r}")
        if not self.series:
            raise ContractError("chart has no series")
        lengths = {len(v) for v in self.series.values()}
        if len(lengths) != 1:
            raise ContractError("chart series differ in length")
        n = lengths.pop()
        if n == 0:
            raise ContractError("chart series are empty")
        if self.categories is not None and len(self.categories) != n:
            raise ContractError("category labels do not match the series length")
        if self.x_values is not None and len(self.x_values) != n:
            raise ContractError("x values do not match the series length")
        return n


def _f(v: float) -> str:
    return f"{v:.2f}"


def _finite(values):
    return [v for v in values if v is not None and math.isfinite(v)]


def _range(values):
    vals = _finite(values)
    if not vals:
        return 0.0, 1.0
    lo, hi = min(min(vals), 0.0), max(max(vals), 0.0)
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def _axes(lo, hi, spec) -> list:
    x0, x1, y0, y1 = LEFT, W - RIGHT, H - BOTTOM, TOP
    out = [f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
           f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>']
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        y = y0 - (y0 - y1) * k / 4
        out.append(f'<text x="{x0 - 6}" y="{_f(y + 4)}" text-anchor="end" font-size="11">{v:.3g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2}" y="{H - 15}" text-anchor="middle" font-size="12">'
               f'{escape(spec.x_label)}</text>')
    out.append(f'<text x="15" y="{(y0 + y1) / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 15 {(y0 + y1) / 2})">{escape(spec.y_label)}</text>')
    return out


def _legend(names) -> list:
    out = []
    for i, name in enumerate(names):
        x = LEFT + 10 + 140 * i
        out.append(f'<rect x="{x}" y="{TOP - 25}" width="10" height="10" fill="{PALETTE[i % len(PALETTE)]}"/>')
        out.append(f'<text x="{x + 14}" y="{TOP - 16}" font-size="11">{escape(str(name))}</text>')
    return out


def _category_labels(cats, xs) -> list:
    step = max(1, math.ceil(len(cats) / 24))
    return [f'<text x="{_f(x)}" y="{H - BOTTOM + 14}" text-anchor="middle" font-size="10">'
            f'{escape(str(c))}</text>' for i, (c, x) in enumerate(zip(cats, xs)) if i % step == 0]


def _bar(spec, n) -> list:
    values = [v for s in spec.series.values() for v in s]
    lo, hi = _range(values)
    plot_w, plot_h = W - LEFT - RIGHT, H - TOP - BOTTOM
    slot = plot_w / n
    k = len(spec.series)
    bar_w = slot * 0.8 / k

    def y(v):
        return H - BOTTOM - plot_h * (v - lo) / (hi - lo)

    out = _axes(lo, hi, spec) + _legend(spec.series)
    for si, vals in enumerate(spec.series.values()):
        for i, v in enumerate(vals):
            if v is None or not math.isfinite(v):
                continue
            x = LEFT + slot * i + slot * 0.1 + bar_w * si
            top, base = y(max(v, 0.0)), y(min(v, 0.0))
            out.append(f'<rect x="{_f(x)}" y="{_f(top)}" width="{_f(bar_w)}" height="{_f(base - top)}" '
                       f'fill="{PALETTE[si % len(PALETTE)]}"/>')
    cats = spec.categories or [str(i) for i in range(n)]
    out += _category_labels(cats, [LEFT + slot * (i + 0.5) for i in range(n)])
    return out


def _line(spec, n) -> list:
    values = [v for s in spec.series.values() for v in s]
    lo, hi = _range(values)
    xs = spec.x_values if spec.x_values is not None else list(range(n))
    xlo, xhi = min(xs), max(xs)
    if xhi == xlo:
        xhi = xlo + 1
    plot_w, plot_h = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + plot_w * (x - xlo) / (xhi - xlo)

    def py(v):
        return H - BOTTOM - plot_h * (v - lo) / (hi - lo)

    out = _axes(lo, hi, spec) + _legend(spec.series)
    for si, vals in enumerate(spec.series.values()):
        pts = " ".join(f"{_f(px(x))},{_f(py(v))}" for x, v in zip(xs, vals)
                       if v is not None and math.isfinite(v))
        out.append(f'<polyline fill="none" stroke="{PALETTE[si % len(PALETTE)]}" stroke-width="2" '
                   f'points="{pts}"/>')
    cats = spec.categories or [f"{x:g}" for x in xs]
    out += _category_labels(cats, [px(x) for x in xs])
    return out


def _heat(spec, n) -> list:
    rows = list(spec.series.items())
    vals = _finite([v for _, s in rows for v in s])
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    plot_w, plot_h = W - LEFT - RIGHT, H - TOP - BOTTOM
    cw, ch = plot_w / n, plot_h / len(rows)
    out = []
    for ri, (name, series) in enumerate(rows):
        y = TOP + ch * ri
        out.append(f'<text x="{LEFT - 6}" y="{_f(y + ch / 2 + 4)}" text-anchor="end" font-size="10">'
                   f'{escape(str(name))}</text>')
        for ci, v in enumerate(series):
            if v is None or not math.isfinite(v):
                fill = "#eeeeee"
            else:
                a = (v - lo) / span
                g = round(255 * (1 - a))
                fill = f"#ff{g:02x}{g:02x}"
            out.append(f'<rect x="{_f(LEFT + cw * ci)}" y="{_f(y)}" width="{_f(cw)}" height="{_f(ch)}" '
                       f'fill="{fill}" stroke="white" stroke-width="0.5"/>')
    cats = spec.categories or [str(i) for i in range(n)]
    out += _category_labels(cats, [LEFT + cw * (i + 0.5) for i in range(n)])
    out.append(f'<text x="{(LEFT + W - RIGHT) / 2}" y="{H - 15}" text-anchor="middle" font-size="12">'
               f'{escape(spec.x_label)}</text>')
    out.append(f'<text x="{W - RIGHT}" y="{TOP - 10}" text-anchor="end" font-size="10">'
               f'range {lo:.3g} to {hi:.3g}</text>')
    return out


def chart_svg(spec: ChartSpec) -> str:
    n = spec.validate()
    body = {"bar": _bar, "line": _line, "heatmap": _heat}[spec.kind](spec, n)
    head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif">',
            f'<rect width="{W}" height="{H}" fill="white"/>']
    if spec.title:
        head.append(f'<text x="{W / 2}" y="16" text-anchor="middle" font-size="14">'
                    f'{escape(spec.title)}</text>')
    return "\n".join(head + body + ["</svg>"]) + "\n"


def render_chart(spec: ChartSpec, path) -> None:
    """Write ``spec`` as a standalone SVG; nothing is written if the spec is invalid."""
    text = chart_svg(spec)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ContractError(f"cannot write chart {path}: {exc}") from exc
