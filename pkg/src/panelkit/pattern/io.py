"""Pattern and point-cloud file I/O."""

from __future__ import annotations

import json

import numpy as np

from ..errors import InvariantViolation, ParseError
from .types import Panel, SewingPattern


def pattern_to_dict(pattern, vocabulary=None):
    panels = []
    for p in pattern.panels:
        entry = {
            "class": int(p.class_id),
            "vertices": [[float(x), float(y)] for x, y in p.vertices],
            "curvatures": [
                None if c is None else [float(c[0]), float(c[1])] for c in p.curvatures
            ],
            "rotation": [float(v) for v in p.rotation],
            "translation": [float(v) for v in p.translation],
        }
        if vocabulary is not None:
            entry["class_name"] = vocabulary.name_of(p.class_id)
        panels.append(entry)
    stitches = [
        [[int(a[0]), int(a[1])], [int(b[0]), int(b[1])]] for a, b in pattern.stitches
    ]
    return {"panels": panels, "stitches": stitches}


def serialize_pattern(pattern, path, vocabulary=None):
    with open(path, "w") as fh:
        json.dump(pattern_to_dict(pattern, vocabulary), fh, indent=2)
        fh.write("\n")


def pattern_from_dict(doc):
    try:
        panels = []
        for i, entry in enumerate(doc["panels"]):
            curvatures = tuple(
                None if c is None else (float(c[0]), float(c[1]))
                for c in entry["curvatures"]
            )
            panels.append(
                Panel(
                    class_id=int(entry["class"]),
                    vertices=tuple((float(x), float(y)) for x, y in entry["vertices"]),
                    curvatures=curvatures,
                    rotation=tuple(float(v) for v in entry["rotation"]),
                    translation=tuple(float(v) for v in entry["translation"]),
                )
            )
        stitches = tuple(
            ((int(a[0]), int(a[1])), (int(b[0]), int(b[1])))
            for a, b in doc["stitches"]
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed pattern document: {exc}") from exc
    pattern = SewingPattern(panels=tuple(panels), stitches=stitches)
    pattern.validate()  # raises InvariantViolation on bad geometry/references
    return pattern


def parse_pattern(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "panels" not in doc:
        raise ParseError(f"{path}: missing top-level 'panels'")
    return pattern_from_dict(doc)


def save_point_cloud(points, path):
    np.savetxt(path, np.asarray(points, dtype=np.float64), fmt="%.6f")


def load_point_cloud(path):
    try:
        pts = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if pts.shape[1] != 3:
        raise ParseError(f"{path}: expected 3 columns, got {pts.shape[1]}")
    return pts
