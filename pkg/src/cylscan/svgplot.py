"""Deterministic SVG overlays of projected slice points and fitted models.

Text output (no raster backend) so plots can be golden-file tested: points
are red dots, fitted circles/ellipses blue outlines, axes in meters with
1:1 scale.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .fitting import CircleModel, EllipseModel

_PLOT_SIZE = 480.0
_MARGIN = 56.0
_FMT = "{:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0.0:
        return [lo]
    step = 10.0 ** math.floor(math.log10(span / target))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (mult * step) <= target:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


def render_overlay_svg(points2d, models, path, point_radius_px: float = 2.0) -> None:
    """Write an SVG of 2D points (red) with fitted models (blue) overlaid.

    Both axes share one meters-to-pixels scale so circles stay circular.
    """
    pts = np.asarray(points2d, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("overlay needs at least one point")

    xs, ys = pts[:, 0], pts[:, 1]
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    for model in models:
        if isinstance(model, CircleModel):
            x_lo = min(x_lo, model.center[0] - model.radius)
            x_hi = max(x_hi, model.center[0] + model.radius)
            y_lo = min(y_lo, model.center[1] - model.radius)
            y_hi = max(y_hi, model.center[1] + model.radius)
        elif isinstance(model, EllipseModel):
            x_lo = min(x_lo, model.center[0] - model.semi_major)
            x_hi = max(x_hi, model.center[0] + model.semi_major)
            y_lo = min(y_lo, model.center[1] - model.semi_major)
            y_hi = max(y_hi, model.center[1] + model.semi_major)
        else:
            raise TypeError(f"cannot draw model of type {type(model).__name__}")

    span = max(x_hi - x_lo, y_hi - y_lo, 1e-9)
    pad = 0.05 * span
    x_lo, x_hi = x_lo - pad, x_hi + pad
    y_lo, y_hi = y_lo - pad, y_hi + pad
    span = max(x_hi - x_lo, y_hi - y_lo)
    scale = _PLOT_SIZE / span

    def to_px(x: float, y: float) -> tuple[float, float]:
        return (_MARGIN + (x - x_lo) * scale, _MARGIN + (y_hi - y) * scale)

    width = _MARGIN * 2 + (x_hi - x_lo) * scale
    height = _MARGIN * 2 + (y_hi - y_lo) * scale

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_FMT.format(width)}" '
        f'height="{_FMT.format(height)}" '
        f'viewBox="0 0 {_FMT.format(width)} {_FMT.format(height)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]

    # axes with metric tick labels
    ax_left, ax_bottom = to_px(x_lo, y_lo)
    ax_right, _ = to_px(x_hi, y_lo)
    _, ax_top = to_px(x_lo, y_hi)
    lines.append('<g id="axes" stroke="black" stroke-width="1" font-size="11">')
    lines.append(
        f'<line x1="{_FMT.format(ax_left)}" y1="{_FMT.format(ax_bottom)}" '
        f'x2="{_FMT.format(ax_right)}" y2="{_FMT.format(ax_bottom)}"/>'
    )
    lines.append(
        f'<line x1="{_FMT.format(ax_left)}" y1="{_FMT.format(ax_bottom)}" '
        f'x2="{_FMT.format(ax_left)}" y2="{_FMT.format(ax_top)}"/>'
    )
    for tick in _nice_ticks(x_lo, x_hi):
        px, py = to_px(tick, y_lo)
        lines.append(
            f'<line x1="{_FMT.format(px)}" y1="{_FMT.format(py)}" '
            f'x2="{_FMT.format(px)}" y2="{_FMT.format(py + 5)}"/>'
        )
        lines.append(
            f'<text x="{_FMT.format(px)}" y="{_FMT.format(py + 18)}" '
            f'text-anchor="middle" stroke="none">{tick:g}</text>'
        )
    for tick in _nice_ticks(y_lo, y_hi):
        px, py = to_px(x_lo, tick)
        lines.append(
            f'<line x1="{_FMT.format(px - 5)}" y1="{_FMT.format(py)}" '
            f'x2="{_FMT.format(px)}" y2="{_FMT.format(py)}"/>'
        )
        lines.append(
            f'<text x="{_FMT.format(px - 8)}" y="{_FMT.format(py + 4)}" '
            f'text-anchor="end" stroke="none">{tick:g}</text>'
        )
    lines.append(
        f'<text x="{_FMT.format((ax_left + ax_right) / 2)}" '
        f'y="{_FMT.format(ax_bottom + 36)}" text-anchor="middle" stroke="none">x [m]</text>'
    )
    lines.append(
        f'<text x="{_FMT.format(ax_left - 40)}" y="{_FMT.format((ax_bottom + ax_top) / 2)}" '
        f'text-anchor="middle" stroke="none" transform="rotate(-90 '
        f'{_FMT.format(ax_left - 40)} {_FMT.format((ax_bottom + ax_top) / 2)})">y [m]</text>'
    )
    lines.append("</g>")

    lines.append('<g id="points" fill="red">')
    for x, y in pts:
        px, py = to_px(x, y)
        lines.append(
            f'<circle cx="{_FMT.format(px)}" cy="{_FMT.format(py)}" '
            f'r="{_FMT.format(point_radius_px)}"/>'
        )
    lines.append("</g>")

    lines.append('<g id="models" fill="none" stroke="blue" stroke-width="1.5">')
    for model in models:
        if isinstance(model, CircleModel):
            px, py = to_px(model.center[0], model.center[1])
            lines.append(
                f'<circle cx="{_FMT.format(px)}" cy="{_FMT.format(py)}" '
                f'r="{_FMT.format(model.radius * scale)}"/>'
            )
        else:
            px, py = to_px(model.center[0], model.center[1])
            # y is flipped on the canvas, so the rotation flips sign
            deg = -math.degrees(model.rotation)
            lines.append(
                f'<ellipse cx="{_FMT.format(px)}" cy="{_FMT.format(py)}" '
                f'rx="{_FMT.format(model.semi_major * scale)}" '
                f'ry="{_FMT.format(model.semi_minor * scale)}" '
                f'transform="rotate({_FMT.format(deg)} {_FMT.format(px)} {_FMT.format(py)})"/>'
            )
    lines.append("</g>")
    lines.append("</svg>")

    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
