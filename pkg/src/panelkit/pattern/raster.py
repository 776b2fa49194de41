"""Panel rasterization to centroid-centered binary masks."""

from __future__ import annotations

import numpy as np

from ..errors import DegeneratePanel, PanelOutOfBounds, ResolutionMismatch
from .bezier import sample_boundary


def polygon_centroid(poly):
    """Area centroid of a closed polygon given as (n, 2) vertices."""
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if abs(area) < 1e-12:
        return poly.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def points_in_polygon(points, poly):
    """Vectorized crossing-number test; boundary points are implementation-tied."""
    x, y = points[:, 0], points[:, 1]
    px, py = poly[:, 0], poly[:, 1]
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    inside = np.zeros(len(points), dtype=bool)
    for i in range(len(poly)):
        cond = (py[i] > y) != (qy[i] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = px[i] + (y - py[i]) / (qy[i] - py[i]) * (qx[i] - px[i])
        inside ^= cond & (x < xint)
    return inside


def pixel_centers(resolution, scale, center):
    """Pixel-center grid in cm; row 0 is the top of the mask (y up)."""
    h, w = resolution
    cols = (np.arange(w) - (w - 1) / 2.0) * scale + center[0]
    rows = ((h - 1) / 2.0 - np.arange(h)) * scale + center[1]
    xx, yy = np.meshgrid(cols, rows)
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def rasterize_panel(panel, resolution=(32, 32), scale=1.0, per_edge=32):
    """Binary mask: 1 where the pixel center lies inside the Bezier boundary.

    The mask grid is centered on the panel's boundary centroid, so panel
    translation in its local frame never moves the mask.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    h, w = resolution
    boundary = sample_boundary(panel, per_edge=max(per_edge, 32))
    centroid = polygon_centroid(boundary)
    half_w, half_h = w * scale / 2.0, h * scale / 2.0
    rel = boundary - centroid
    if (np.abs(rel[:, 0]) > half_w).any() or (np.abs(rel[:, 1]) > half_h).any():
        raise PanelOutOfBounds(
            f"panel extent {np.abs(rel).max(axis=0)} exceeds mask half-extent "
            f"({half_w}, {half_h})"
        )
    grid = pixel_centers(resolution, scale, centroid)
    mask = points_in_polygon(grid, boundary).reshape(h, w)
    if mask.sum() < 4:
        raise DegeneratePanel(f"panel covers {int(mask.sum())} pixels (< 4)")
    return mask.astype(np.float64)


def panel_iou(mask_a, mask_b):
    """Intersection over union of two binary masks; 1.0 when both empty."""
    mask_a = np.asarray(mask_a)
    mask_b = np.asarray(mask_b)
    if mask_a.shape != mask_b.shape:
        raise ResolutionMismatch(f"{mask_a.shape} vs {mask_b.shape}")
    a = mask_a > 0.5
    b = mask_b > 0.5
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)
