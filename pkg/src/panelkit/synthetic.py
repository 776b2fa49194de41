"""Synthetic garments: parametric panel templates placed around a
cylindrical body proxy, with ground-truth stitches and sampled clouds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pattern.bezier import sample_boundary
from .pattern.raster import points_in_polygon, polygon_centroid
from .pattern.types import GarmentSample, Panel, SewingPattern
from .prompt import PanelVocabulary
from .stitcher import place_points

BODY_RADIUS = 9.0
POINT_NOISE_SIGMA = 0.3

TRAIN_FAMILIES = ("skirt-2p", "skirt-4p", "tee", "tank", "pants", "dress")
HOLDOUT_FAMILIES = ("jacket", "waistband-variants")
ALL_FAMILIES = TRAIN_FAMILIES + HOLDOUT_FAMILIES


@dataclass(frozen=True)
class SyntheticSpec:
    family: str
    params: dict


def draw_spec(family, rng):
    """Sample shape parameters for one garment of the given family."""
    if family not in ALL_FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    p = {
        "width": float(rng.uniform(12.0, 18.0)),
        "length": float(rng.uniform(14.0, 20.0)),
        "flare": float(rng.uniform(1.05, 1.3)),
        "curve": float(rng.uniform(0.03, 0.10)),
    }
    if family == "skirt-4p":
        p["width"] = float(rng.uniform(8.0, 12.0))
    if family == "pants":
        p["width"] = float(rng.uniform(7.0, 10.0))
        p["length"] = float(rng.uniform(18.0, 24.0))
        p["flare"] = float(rng.uniform(0.85, 1.0))
    if family == "dress":
        p["length"] = float(rng.uniform(18.0, 24.0))
    if family in ("tee", "jacket"):
        p["sleeve_w"] = float(rng.uniform(5.0, 7.0))
        p["sleeve_l"] = float(rng.uniform(8.0, 12.0))
        p["notch"] = float(rng.uniform(2.0, 4.0))
    if family == "waistband-variants":
        p["band_h"] = float(rng.uniform(3.0, 5.0))
    return SyntheticSpec(family=family, params=p)


def _center(verts):
    v = np.asarray(verts, dtype=np.float64)
    return v - polygon_centroid(v)


def _trapezoid(w_top, w_bot, h, hem_curve=0.0):
    verts = _center(
        [(-w_bot / 2, -h / 2), (w_bot / 2, -h / 2), (w_top / 2, h / 2), (-w_top / 2, h / 2)]
    )
    curvs = [(0.5, -hem_curve) if hem_curve else None, None, None, None]
    return tuple(map(tuple, verts)), tuple(curvs)


def _pentagon_notch(w, h, notch):
    verts = _center(
        [(-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (0.0, h / 2 - notch), (-w / 2, h / 2)]
    )
    return tuple(map(tuple, verts)), (None,) * 5


def _rectangle(w, h, hem_curve=0.0):
    return _trapezoid(w, w, h, hem_curve)


def _azimuth_placement(theta_deg, y_center, radius=BODY_RADIUS):
    th = np.radians(theta_deg)
    return (0.0, theta_deg, 0.0), (radius * np.sin(th), y_center, radius * np.cos(th))


def _build_family(spec):
    """(class_name, verts, curvs, rotation, translation) list + stitches."""
    p = spec.params
    w, h, flare, curve = p["width"], p["length"], p["flare"], p["curve"]
    panels = []
    stitches = []

    def add(name, geom, theta, y):
        rot, tr = _azimuth_placement(theta, y)
        panels.append((name, geom[0], geom[1], rot, tr))

    if spec.family in ("skirt-2p", "tank", "dress"):
        names = {
            "skirt-2p": ("skirt-front", "skirt-back"),
            "tank": ("tank-front", "tank-back"),
            "dress": ("dress-front", "dress-back"),
        }[spec.family]
        geom = _trapezoid(w, w * flare, h, curve)
        add(names[0], geom, 0, -h / 2)
        add(names[1], geom, 180, -h / 2)
        stitches = [((0, 1), (1, 3)), ((0, 3), (1, 1))]
    elif spec.family == "skirt-4p":
        names = (
            "skirt-quarter-front-left",
            "skirt-quarter-front-right",
            "skirt-quarter-back-left",
            "skirt-quarter-back-right",
        )
        geom = _trapezoid(w, w * flare, h, curve)
        # counter-clockwise around the body: front-right, front-left, back-left, back-right
        order = [(names[1], 0), (names[0], 90), (names[2], 180), (names[3], 270)]
        for name, theta in order:
            add(name, geom, theta, -h / 2)
        stitches = [((i, 1), ((i + 1) % 4, 3)) for i in range(4)]
    elif spec.family == "tee":
        body = _pentagon_notch(w, h, p["notch"])
        back = _rectangle(w, h)
        sleeve = _rectangle(p["sleeve_w"], p["sleeve_l"])
        add("tee-front", body, 0, 0)
        add("tee-back", back, 180, 0)
        panels.append(
            ("sleeve-left", sleeve[0], sleeve[1], (0.0, 0.0, 90.0), (-w / 2 - 3.0, h / 2, 2.0))
        )
        panels.append(
            ("sleeve-right", sleeve[0], sleeve[1], (0.0, 0.0, -90.0), (w / 2 + 3.0, h / 2, 2.0))
        )
        stitches = [
            ((0, 1), (1, 3)),
            ((0, 4), (1, 1)),
            ((0, 3), (2, 1)),  # left shoulder edge to left sleeve
            ((0, 2), (3, 3)),  # right shoulder edge to right sleeve
        ]
    elif spec.family == "pants":
        geom = _trapezoid(w, w * flare, h, curve)
        add("pant-front-right", geom, 35, -h / 2)
        add("pant-front-left", geom, -35, -h / 2)
        add("pant-back-left", geom, 215, -h / 2)
        add("pant-back-right", geom, 145, -h / 2)
        stitches = [
            ((1, 1), (0, 3)),  # front center seam
            ((2, 1), (3, 3)),  # back center seam
            ((0, 1), (3, 1)),  # right side
            ((1, 3), (2, 3)),  # left side
        ]
    elif spec.family == "jacket":
        half = _trapezoid(w / 2, w / 2 * flare, h)
        back = _rectangle(w, h)
        sleeve = _rectangle(p["sleeve_w"], p["sleeve_l"])
        add("jacket-front-left", half, -35, 0)
        add("jacket-front-right", half, 35, 0)
        add("jacket-back", back, 180, 0)
        panels.append(
            ("sleeve-left", sleeve[0], sleeve[1], (0.0, 0.0, 90.0), (-w / 2 - 3.0, h / 2, 2.0))
        )
        panels.append(
            ("sleeve-right", sleeve[0], sleeve[1], (0.0, 0.0, -90.0), (w / 2 + 3.0, h / 2, 2.0))
        )
        stitches = [
            ((0, 3), (2, 1)),  # left side seam
            ((1, 1), (2, 3)),  # right side seam
            ((0, 2), (3, 1)),  # left sleeve to left front top
            ((1, 2), (4, 3)),  # right sleeve to right front top
        ]
    elif spec.family == "waistband-variants":
        geom = _trapezoid(w, w * flare, h, curve)
        band = _rectangle(w, p["band_h"])
        add("skirt-front", geom, 0, -h / 2)
        add("skirt-back", geom, 180, -h / 2)
        add("waistband-front", band, 0, p["band_h"] / 2)
        add("waistband-back", band, 180, p["band_h"] / 2)
        stitches = [
            ((0, 1), (1, 3)),
            ((0, 3), (1, 1)),
            ((0, 2), (2, 0)),  # waist top to band bottom
            ((1, 2), (3, 0)),
            ((2, 1), (3, 3)),
            ((2, 3), (3, 1)),
        ]
    else:
        raise ValueError(f"unknown family {spec.family!r}")
    return panels, stitches


def build_pattern(spec, vocabulary=None):
    vocabulary = vocabulary or PanelVocabulary()
    raw, stitches = _build_family(spec)
    panels = tuple(
        Panel(
            class_id=vocabulary.index_of(name),
            vertices=verts,
            curvatures=curvs,
            rotation=rot,
            translation=tuple(float(v) for v in tr),
        )
        for name, verts, curvs, rot, tr in raw
    )
    return SewingPattern(panels=panels, stitches=tuple(stitches))


def _sample_panel_interior(panel, count, rng):
    """Uniform 2D points inside the Bezier boundary, by rejection."""
    boundary = sample_boundary(panel, per_edge=16)
    lo, hi = boundary.min(axis=0), boundary.max(axis=0)
    out = np.empty((0, 2))
    while len(out) < count:
        cand = rng.uniform(lo, hi, size=(max(4 * count, 64), 2))
        keep = cand[points_in_polygon(cand, boundary)]
        out = np.concatenate([out, keep], axis=0)
    return out[:count]


def generate_sample(spec, rng, num_points=1024, vocabulary=None):
    """One garment: pattern + noisy surface point cloud; deterministic per rng."""
    vocabulary = vocabulary or PanelVocabulary()
    pattern = build_pattern(spec, vocabulary)
    pattern.validate()
    areas = np.array([_polygon_area(p) for p in pattern.panels])
    counts = np.maximum((num_points * areas / areas.sum()).astype(int), 1)
    counts[0] += num_points - counts.sum()
    clouds = []
    for panel, cnt in zip(pattern.panels, counts):
        pts2d = _sample_panel_interior(panel, int(cnt), rng)
        placed = place_points(pts2d, panel.rotation, panel.translation)
        clouds.append(placed)
    points = np.concatenate(clouds, axis=0)
    points = points + rng.normal(0.0, POINT_NOISE_SIGMA, size=points.shape)
    return GarmentSample(
        points=points,
        pattern=pattern,
        garment_class=spec.family,
        panel_class_set=frozenset(p.class_id for p in pattern.panels),
    )


def _polygon_area(panel):
    b = sample_boundary(panel, per_edge=8)
    x, y = b[:, 0], b[:, 1]
    return float(abs(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def generate_dataset(families, count, seed=0, num_points=1024, vocabulary=None):
    """Deterministic dataset cycling through the families round-robin."""
    vocabulary = vocabulary or PanelVocabulary()
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(count):
        family = families[i % len(families)]
        spec = draw_spec(family, rng)
        samples.append(generate_sample(spec, rng, num_points, vocabulary))
    return samples
