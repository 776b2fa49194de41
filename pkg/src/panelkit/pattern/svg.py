"""SVG export: one <path> per panel with quadratic Bezier segments."""

from __future__ import annotations

import numpy as np

from .bezier import control_point

GRID_COLS = 4
CELL_PAD = 5.0


def _panel_path(panel, offset):
    v = panel.vertex_array()
    # flip y: SVG y grows downward
    def pt(p):
        return f"{p[0] + offset[0]:.3f},{offset[1] - p[1]:.3f}"

    parts = [f"M {pt(v[0])}"]
    for i in range(panel.num_edges):
        s, e, c = panel.edge(i)
        ctrl = control_point(s, e, c)
        parts.append(f"Q {pt(ctrl)} {pt(e)}")
    parts.append("Z")
    return " ".join(parts)


def pattern_to_svg(pattern, path, cell=40.0):
    """Lay panels on a grid, one closed Bezier path per panel."""
    n = len(pattern.panels)
    cols = min(GRID_COLS, max(n, 1))
    rows = (n + cols - 1) // cols if n else 1
    width = cols * cell
    height = rows * cell
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'width="{width}" height="{height}">'
    ]
    for i, panel in enumerate(pattern.panels):
        r, c = divmod(i, cols)
        center = panel.vertex_array().mean(axis=0)
        offset = (
            c * cell + cell / 2.0 - center[0],
            r * cell + cell / 2.0 + center[1],
        )
        lines.append(
            f'  <path d="{_panel_path(panel, offset)}" fill="none" '
            f'stroke="black" stroke-width="0.5"/>'
        )
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def count_paths(svg_path):
    with open(svg_path) as fh:
        return fh.read().count("<path")
