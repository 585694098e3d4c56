"""cmclab.svg: minimal SVG 1.1 scatter plots."""

import math
from typing import Dict, List, Sequence, Tuple
from xml.sax.saxutils import escape

WIDTH = 480
HEIGHT = 360
MARGIN = 56

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _limits(values: List[float]) -> Tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def scatter_plot(
    series: Dict[str, Sequence[Tuple[float, float]]],
    title: str,
    xlabel: str,
    ylabel: str,
    polyline: bool = True,
) -> str:
    """Axes, points and (optionally) a polyline per series, as an SVG document."""
    points = [p for values in series.values() for p in values if all(map(math.isfinite, p))]
    if not points:
        points = [(0.0, 0.0)]

    xmin, xmax = _limits([p[0] for p in points])
    ymin, ymax = _limits([p[1] for p in points])

    def sx(x):
        return MARGIN + (x - xmin) / (xmax - xmin) * (WIDTH - 2 * MARGIN)

    def sy(y):
        return HEIGHT - MARGIN - (y - ymin) / (ymax - ymin) * (HEIGHT - 2 * MARGIN)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="{MARGIN / 2}" text-anchor="middle" '
        f'font-size="14">{escape(title)}</text>',
    ]

    # axes with end ticks
    x0, y0 = MARGIN, HEIGHT - MARGIN
    x1, y1 = WIDTH - MARGIN, MARGIN
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for value, x in ((xmin, x0), (xmax, x1)):
        out.append(
            f'<text x="{x}" y="{y0 + 16}" text-anchor="middle" font-size="10">{_fmt(value)}</text>'
        )
    for value, y in ((ymin, y0), (ymax, y1)):
        out.append(
            f'<text x="{x0 - 4}" y="{y}" text-anchor="end" font-size="10">{_fmt(value)}</text>'
        )
    out.append(
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-size="12">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>'
    )

    for index, (name, values) in enumerate(series.items()):
        color = COLORS[index % len(COLORS)]
        finite = [p for p in values if all(map(math.isfinite, p))]
        coords = [(sx(x), sy(y)) for x, y in finite]
        if polyline and len(coords) > 1:
            path = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in coords)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}"/>')
        for x, y in coords:
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{color}"/>')
        out.append(
            f'<text x="{x1 - 4}" y="{y1 + 14 * (index + 1)}" text-anchor="end" '
            f'font-size="11" fill="{color}">{escape(name)}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_plot(path: str, *args, **kwargs) -> str:
    """Write `scatter_plot(*args, **kwargs)` to `path`."""
    with open(path, "w", newline="") as f:
        f.write(scatter_plot(*args, **kwargs))
    return path
