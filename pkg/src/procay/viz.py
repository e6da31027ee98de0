"""Radially circular view of Cayley trajectories, written as SVG and CSV.

A nonzero vector ``v`` is split into its planar direction
``disk = (v_x, v_y) / |v|`` and a norm carrying the sign bit of ``v_z``,
``signed_norm = sign'(v_z) |v|``. The zero vector maps to ``((0, 0), 0)``.
Planar components are rebuilt from ``|signed_norm|`` so the map inverts for
either sign of ``v_z``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .correspondence import atomic_write_text, format_number
from .errors import InconsistentPoint

CSV_HEADER = "run_id,step,vx,vy,vz,disk_x,disk_y,signed_norm,cost"
RUN_CODES = ("p0", "p1")

# 1 - |disk|^2 at or below this is rounding noise from a planar vector
_PLANAR_GAP = 8.0 * np.finfo(float).eps
# 2**27 + 1, splits a double into two 26-bit halves
_SPLITTER = 134217729.0


class RadialCircularPoint(NamedTuple):
    disk: tuple
    signed_norm: float


def sign_prime(t: float) -> float:
    """``-1.0`` when the sign bit of ``t`` is set, else ``+1.0``; -0.0 gives -1."""
    return math.copysign(1.0, t)


def radial_circular(v) -> RadialCircularPoint:
    vx, vy, vz = (float(c) for c in np.asarray(v, dtype=float).reshape(3))
    norm = math.hypot(vx, vy, vz)
    if norm == 0.0:
        return RadialCircularPoint((0.0, 0.0), 0.0)
    return RadialCircularPoint((vx / norm, vy / norm), sign_prime(vz) * norm)


def _two_square(a):
    """``a*a`` as an unevaluated sum ``hi + lo``, exact."""
    c = _SPLITTER * a
    a_hi = c - (c - a)
    a_lo = a - a_hi
    hi = a * a
    lo = ((a_hi * a_hi - hi) + 2.0 * a_hi * a_lo) + a_lo * a_lo
    return hi, lo


def radial_circular_inverse(point) -> np.ndarray:
    """Rebuild the Cayley vector from a :class:`RadialCircularPoint`.

    ``(v_x, v_y) = |signed_norm| disk`` and
    ``v_z = sign'(signed_norm) sqrt(|v|^2 - v_x^2 - v_y^2)``. The height is
    computed as ``|v| sqrt(1 - |disk|^2)`` with the bracket summed exactly,
    so the only loss is the rounding already present in ``disk``. Gaps
    within a few ulps of zero are read as a planar vector (``v_z = +-0``).

    Raises
    ------
    InconsistentPoint
        If ``|disk| > 1`` beyond rounding, i.e. the squared height is below
        ``-1e-12`` relative to ``max(1, |v|^2)``.
    """
    disk, sn = point
    dx, dy = float(disk[0]), float(disk[1])
    sn = float(sn)
    norm = abs(sn)
    if norm == 0.0:
        return np.zeros(3)
    hx, lx = _two_square(dx)
    hy, ly = _two_square(dy)
    gap = math.fsum((1.0, -hx, -lx, -hy, -ly))
    if gap <= _PLANAR_GAP:
        if gap < 0.0 and gap * norm * norm < -1e-12 * max(1.0, norm * norm):
            raise InconsistentPoint(
                f"disk norm exceeds one: 1 - |disk|^2 = {gap:.3g} at |v| = {norm:.6g}"
            )
        gap = 0.0
    vz = sign_prime(sn) * norm * math.sqrt(gap)
    return np.array([norm * dx, norm * dy, vz])


def _fmt(x) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format_number(x)


def trajectory_rows(traces: Sequence, labels=RUN_CODES):
    """CSV data rows (without header), one per accepted state."""
    rows = []
    for label, trace in zip(labels, traces):
        for step, (v, cost) in enumerate(trace.states):
            p = radial_circular(v)
            fields = [label, str(step)]
            fields += [_fmt(c) for c in v]
            fields += [_fmt(p.disk[0]), _fmt(p.disk[1]), _fmt(p.signed_norm), _fmt(cost)]
            rows.append(",".join(fields))
    return rows


def trajectory_csv(traces, labels=RUN_CODES) -> str:
    return "\n".join([CSV_HEADER, *trajectory_rows(traces, labels)]) + "\n"


@dataclass(frozen=True)
class _Frame:
    x0: float
    y0: float
    width: float
    height: float


def _c(x):
    return f"{x:.4f}"


def _polyline(points, style):
    coords = " ".join(f"{_c(x)},{_c(y)}" for x, y in points)
    return f'<polyline points="{coords}" fill="none" {style}/>'


def _markers(points, colour):
    (sx, sy), (ex, ey) = points[0], points[-1]
    return [
        f'<circle cx="{_c(sx)}" cy="{_c(sy)}" r="4" fill="white" stroke="{colour}" stroke-width="1.5"/>',
        f'<rect x="{_c(ex - 3.5)}" y="{_c(ey - 3.5)}" width="7" height="7" fill="{colour}"/>',
    ]


def trajectory_svg(traces, labels=RUN_CODES, winner: int = 0) -> str:
    """SVG with the disk panel (unit circle and both runs) and a side panel
    of signed norm against step. The winning run is drawn solid."""
    size = 360.0
    pad = 30.0
    disk_frame = _Frame(pad, pad, size, size)
    side = _Frame(2 * pad + size + 20.0, pad, 300.0, size)
    radius = 0.5 * size - 10.0
    cx = disk_frame.x0 + 0.5 * size
    cy = disk_frame.y0 + 0.5 * size

    def to_disk(d):
        return cx + radius * d[0], cy - radius * d[1]

    series = [[radial_circular(v) for v, _ in tr.states] for tr in traces]
    norms = [p.signed_norm for s in series for p in s]
    lo, hi = min(norms + [0.0]), max(norms + [0.0])
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    steps = max(max(len(s) for s in series) - 1, 1)

    def to_side(k, sn):
        x = side.x0 + side.width * k / steps
        y = side.y0 + side.height * (hi - sn) / (hi - lo)
        return x, y

    width = side.x0 + side.width + pad
    height = size + 2 * pad + 20.0
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_c(width)}" '
        f'height="{_c(height)}" viewBox="0 0 {_c(width)} {_c(height)}">',
        f'<rect x="0" y="0" width="{_c(width)}" height="{_c(height)}" fill="white"/>',
        f'<circle id="unit-circle" cx="{_c(cx)}" cy="{_c(cy)}" r="{_c(radius)}" '
        'fill="none" stroke="black" stroke-width="1"/>',
        f'<line x1="{_c(cx - radius)}" y1="{_c(cy)}" x2="{_c(cx + radius)}" y2="{_c(cy)}" stroke="#bbbbbb"/>',
        f'<line x1="{_c(cx)}" y1="{_c(cy - radius)}" x2="{_c(cx)}" y2="{_c(cy + radius)}" stroke="#bbbbbb"/>',
        f'<rect x="{_c(side.x0)}" y="{_c(side.y0)}" width="{_c(side.width)}" '
        f'height="{_c(side.height)}" fill="none" stroke="black"/>',
    ]
    zx0, zy = to_side(0, 0.0)
    out.append(
        f'<line x1="{_c(zx0)}" y1="{_c(zy)}" x2="{_c(side.x0 + side.width)}" y2="{_c(zy)}" stroke="#bbbbbb"/>'
    )
    colours = ("#1f4fbf", "#2a9d3a")
    for k, (label, pts) in enumerate(zip(labels, series)):
        is_winner = k == winner
        colour = colours[0] if is_winner else colours[1]
        style = f'stroke="{colour}" stroke-width="{2 if is_winner else 1.5}"'
        if not is_winner:
            style += ' stroke-dasharray="6,4"'
        cls = "winner" if is_winner else "loser"
        disk_pts = [to_disk(p.disk) for p in pts]
        side_pts = [to_side(i, p.signed_norm) for i, p in enumerate(pts)]
        out.append(f'<g id="run-{label}" class="{cls}">')
        out.append(_polyline(disk_pts, style))
        out.extend(_markers(disk_pts, colour))
        out.append(_polyline(side_pts, style))
        out.extend(_markers(side_pts, colour))
        out.append("</g>")
        ly = size + 2 * pad + 5.0 - 16.0 * (1 - k)
        out.append(
            f'<text x="{_c(side.x0)}" y="{_c(ly + 16)}" font-family="sans-serif" font-size="12" '
            f'fill="{colour}">{label} ({cls})</text>'
        )
    out.append(
        f'<text x="{_c(side.x0)}" y="{_c(side.y0 - 8)}" font-family="sans-serif" '
        f'font-size="12">signed norm vs step</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_paths(path):
    """``(svg_path, csv_path)`` for a base path; a .svg/.csv suffix is dropped."""
    base, ext = os.path.splitext(os.fspath(path))
    if ext.lower() not in (".svg", ".csv"):
        base = os.fspath(path)
    return base + ".svg", base + ".csv"


def emit_trajectory(traces, path, labels=RUN_CODES, winner: int = 0):
    """Write the SVG figure and CSV table of two optimiser traces.

    Returns the two paths written.
    """
    if len(traces) != len(labels):
        raise ValueError("one label per trace")
    if any(len(tr.states) == 0 for tr in traces):
        raise ValueError("traces must be non-empty")
    svg_path, csv_path = trajectory_paths(path)
    atomic_write_text(svg_path, trajectory_svg(traces, labels, winner))
    atomic_write_text(csv_path, trajectory_csv(traces, labels))
    return svg_path, csv_path
