# cli/svg_chart.py
"""Minimal SVG line chart for the speedup curve (P on a log2 axis, speedup on a linear axis)."""

import math
from typing import List, Sequence, Tuple
from xml.sax.saxutils import escape

from analyzer.cost_model import SpeedupPoint

WIDTH, HEIGHT = 480, 320
MARGIN = 48


def _ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _scale(value: float, lo: float, hi: float, out_lo: float, out_hi: float) -> float:
    if hi == lo:
        return (out_lo + out_hi) / 2
    return out_lo + (value - lo) * (out_hi - out_lo) / (hi - lo)


def line_chart(points: Sequence[Tuple[float, float]], x_labels: Sequence[str],
               title: str, x_title: str, y_title: str) -> str:
    """`points` are (x, y) in data space; x is plotted linearly, labels are printed verbatim"""
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = 0.0, max(1.0, math.ceil(max(ys)))
    left, right = MARGIN, WIDTH - MARGIN / 2
    top, bottom = MARGIN / 2, HEIGHT - MARGIN

    def px(x, y):
        return (_scale(x, x_lo, x_hi, left, right), _scale(y, y_lo, y_hi, bottom, top))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<text x="{WIDTH / 2:.1f}" y="14" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for y in _ticks(y_lo, y_hi):
        _, ty = px(x_lo, y)
        out.append(f'<line x1="{left - 4}" y1="{ty:.1f}" x2="{right}" y2="{ty:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{ty + 4:.1f}" text-anchor="end">{y:.1f}</text>')
    for x, label in zip(xs, x_labels):
        tx, _ = px(x, y_lo)
        out.append(f'<text x="{tx:.1f}" y="{bottom + 16}" text-anchor="middle">{escape(label)}</text>')

    path = " ".join(f"{a:.1f},{b:.1f}" for a, b in (px(x, y) for x, y in points))
    out.append(f'<polyline points="{path}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
    for x, y in points:
        cx, cy = px(x, y)
        out.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="3" fill="#1f77b4"/>')

    out.append(f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 10}" '
               f'text-anchor="middle">{escape(x_title)}</text>')
    out.append(f'<text x="14" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {(top + bottom) / 2:.1f})">{escape(y_title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def speedup_svg(points: List[SpeedupPoint], kernel: int) -> str:
    data = [(math.log2(pt.part), float(pt.speedup)) for pt in points]
    labels = [str(pt.part) for pt in points]
    return line_chart(data, labels, f"HetConv speedup over standard conv (K={kernel})",
                      "P (log scale)", "speedup")
