"""Quadratic Bezier edges in the chord frame.

An edge's optional curvature ``(cx, cy)`` places the control point at
``S + cx * (E - S) + cy * |E - S| * n̂`` where ``n̂`` is the chord's left
normal. ``(0.5, 0.0)`` or ``None`` is a straight edge.
"""

from __future__ import annotations

import numpy as np

STRAIGHT = (0.5, 0.0)


def control_point(start, end, curvature):
    """Absolute control point for an edge, chord coordinates -> panel frame."""
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    if curvature is None:
        curvature = STRAIGHT
    chord = end - start
    length = np.hypot(chord[0], chord[1])
    normal = np.array([-chord[1], chord[0]])
    if length > 0:
        normal = normal / length
    return start + curvature[0] * chord + curvature[1] * length * normal


def sample_edge(start, end, curvature, n):
    """n points of the quadratic Bezier B(t) at t = i/(n-1); endpoints exact."""
    if n < 2:
        raise ValueError(f"need n >= 2 sample points, got {n}")
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    ctrl = control_point(start, end, curvature)
    t = np.linspace(0.0, 1.0, n)[:, None]
    pts = (1 - t) ** 2 * start + 2 * t * (1 - t) * ctrl + t ** 2 * end
    pts[0] = start
    pts[-1] = end
    return pts


def sample_boundary(panel, per_edge=32):
    """Closed boundary polyline of a panel, ``per_edge`` points per edge.

    Consecutive edges share endpoints; the duplicate is dropped so the
    result has ``num_edges * (per_edge - 1)`` points.
    """
    pts = []
    for i in range(panel.num_edges):
        s, e, c = panel.edge(i)
        pts.append(sample_edge(s, e, c, per_edge)[:-1])
    return np.concatenate(pts, axis=0)


def resample_panel_outline(panel, per_edge=10):
    """Fixed-size outline: every edge sampled at ``per_edge`` parameters.

    Used for the vertex-distance metric, so curvature influences the
    comparison. Points are B(i/per_edge) for i in 0..per_edge-1 per edge.
    """
    pts = []
    for i in range(panel.num_edges):
        s, e, c = panel.edge(i)
        pts.append(sample_edge(s, e, c, per_edge + 1)[:-1])
    return np.concatenate(pts, axis=0)


def resample_outline_fixed(panel, total):
    """Outline resampled to ``total`` points uniformly in edge-parameter space.

    Parameter u in [0, num_edges) maps edge floor(u) at local t = frac(u);
    handles panels whose edge counts differ.
    """
    n = panel.num_edges
    u = np.arange(total) * (n / total)
    out = np.empty((total, 2))
    for j, uj in enumerate(u):
        i = min(int(uj), n - 1)
        t = uj - i
        s, e, c = panel.edge(i)
        ctrl = control_point(s, e, c)
        out[j] = (1 - t) ** 2 * s + 2 * t * (1 - t) * ctrl + t ** 2 * e
    return out
