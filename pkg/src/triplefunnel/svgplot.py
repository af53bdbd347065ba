"""Self-contained SVG rendering for score-distribution diagnostics.

Output is plain text with fixed-precision coordinates and no timestamps, so a
given pair of sample arrays always renders to byte-identical SVG.  That keeps
plots diff-able and lets tests pin golden files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .errors import TooFewSamples
from .mspt import histogram, kde_curve

ACTUAL_COLOR = "#ff7f0e"  # orange
RANDOM_COLOR = "#1f77b4"  # blue

_WIDTH = 720.0
_HEIGHT = 440.0
_MARGIN_LEFT = 64.0
_MARGIN_RIGHT = 16.0
_MARGIN_TOP = 28.0
_MARGIN_BOTTOM = 52.0


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def _density_bars(samples: Sequence[float], bins: int) -> list[tuple[float, float, float]]:
    """Histogram rescaled to density: count / (n * bin width)."""
    rows = histogram(samples, bins)
    n = len(samples)
    bars = []
    for left, right, count in rows:
        width = right - left
        if width == 0.0:
            # Degenerate constant sample: render a fixed-height marker bar.
            bars.append((left - 0.005, left + 0.005, 1.0 if count else 0.0))
        else:
            bars.append((left, right, count / (n * width)))
    return bars


def emit_distribution_plot(
    actual: Sequence[float],
    random_baseline: Sequence[float],
    path: str | Path,
    bins: int = 20,
    kde_points: int = 256,
) -> None:
    """Write one SVG overlaying both histograms and both KDE curves.

    Actual scores render in orange, the randomized baseline in blue; axes are
    labeled F1-BERTScore and density.  Raises before touching the file if
    either sample set is too small.
    """
    if len(actual) < 2 or len(random_baseline) < 2:
        raise TooFewSamples("distribution plot needs >= 2 samples per series")
    series = [
        (list(map(float, actual)), ACTUAL_COLOR, "actual"),
        (list(map(float, random_baseline)), RANDOM_COLOR, "random baseline"),
    ]
    curves = [kde_curve(samples, kde_points) for samples, _, _ in series]
    bars = [_density_bars(samples, bins) for samples, _, _ in series]

    xs: list[float] = []
    ys: list[float] = [0.0]
    for curve in curves:
        xs.extend(x for x, _ in curve)
        ys.extend(y for _, y in curve)
    for bar_rows in bars:
        xs.extend(left for left, _, _ in bar_rows)
        xs.extend(right for _, right, _ in bar_rows)
        ys.extend(height for _, _, height in bar_rows)
    x_lo, x_hi = min(xs), max(xs)
    y_hi = max(ys) * 1.05 or 1.0
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(x: float) -> float:
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_TOP + plot_h - y / y_hi * plot_h

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_WIDTH)}" '
        f'height="{_fmt(_HEIGHT)}" viewBox="0 0 {_fmt(_WIDTH)} {_fmt(_HEIGHT)}">'
    )
    parts.append('<rect width="100%" height="100%" fill="white"/>')

    # Histogram bars first so the KDE strokes sit on top.
    for bar_rows, (_, color, _) in zip(bars, series):
        for left, right, height in bar_rows:
            if height <= 0.0:
                continue
            x0, x1 = px(left), px(right)
            y0 = py(height)
            parts.append(
                f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" '
                f'width="{_fmt(x1 - x0)}" height="{_fmt(py(0.0) - y0)}" '
                f'fill="{color}" fill-opacity="0.35"/>'
            )
    for curve, (_, color, _) in zip(curves, series):
        points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in curve)
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="2"/>'
        )

    # Axes.
    x_axis_y = py(0.0)
    parts.append(
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(x_axis_y)}" '
        f'x2="{_fmt(_WIDTH - _MARGIN_RIGHT)}" y2="{_fmt(x_axis_y)}" '
        f'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(_MARGIN_TOP)}" '
        f'x2="{_fmt(_MARGIN_LEFT)}" y2="{_fmt(x_axis_y)}" '
        f'stroke="black" stroke-width="1"/>'
    )
    n_ticks = 5
    for i in range(n_ticks + 1):
        xv = x_lo + (x_hi - x_lo) * i / n_ticks
        xp = px(xv)
        parts.append(
            f'<line x1="{_fmt(xp)}" y1="{_fmt(x_axis_y)}" x2="{_fmt(xp)}" '
            f'y2="{_fmt(x_axis_y + 4)}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(xp)}" y="{_fmt(x_axis_y + 16)}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{xv:.3f}</text>'
        )
        yv = y_hi * i / n_ticks
        yp = py(yv)
        parts.append(
            f'<line x1="{_fmt(_MARGIN_LEFT - 4)}" y1="{_fmt(yp)}" '
            f'x2="{_fmt(_MARGIN_LEFT)}" y2="{_fmt(yp)}" stroke="black" '
            f'stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(_MARGIN_LEFT - 8)}" y="{_fmt(yp + 4)}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{yv:.2f}</text>'
        )
    parts.append(
        f'<text x="{_fmt(_MARGIN_LEFT + plot_w / 2)}" y="{_fmt(_HEIGHT - 14)}" '
        f'font-size="13" text-anchor="middle" font-family="sans-serif">'
        f"F1-BERTScore</text>"
    )
    parts.append(
        f'<text x="16" y="{_fmt(_MARGIN_TOP + plot_h / 2)}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif" '
        f'transform="rotate(-90 16 {_fmt(_MARGIN_TOP + plot_h / 2)})">density</text>'
    )
    # Legend, top-right corner of the plot area.
    legend_x = _WIDTH - _MARGIN_RIGHT - 170.0
    for i, (_, color, label) in enumerate(series):
        ly = _MARGIN_TOP + 10.0 + 18.0 * i
        parts.append(
            f'<rect x="{_fmt(legend_x)}" y="{_fmt(ly - 9)}" width="12" height="12" '
            f'fill="{color}" fill-opacity="0.7"/>'
        )
        parts.append(
            f'<text x="{_fmt(legend_x + 18)}" y="{_fmt(ly + 2)}" font-size="12" '
            f'font-family="sans-serif">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
