"""Domain types for sewing patterns.

All coordinates are centimeters. Panel vertices live in a panel-local 2D
frame, counter-clockwise; rotations are intrinsic X-Y-Z Euler angles in
degrees; translations are 3D body-frame centimeters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvariantViolation

E_MAX = 8
NUM_CLASSES = 23


@dataclass(frozen=True)
class Panel:
    class_id: int
    vertices: tuple  # ((x, y), ...) ordered counter-clockwise
    curvatures: tuple  # per edge: None or (cx, cy) in the edge-chord frame
    rotation: tuple = (0.0, 0.0, 0.0)
    translation: tuple = (0.0, 0.0, 0.0)

    @property
    def num_edges(self):
        return len(self.vertices)

    def vertex_array(self):
        return np.asarray(self.vertices, dtype=np.float64)

    def edge(self, i):
        """(start, end, curvature) of edge i, which runs vertex i -> i+1."""
        n = self.num_edges
        return (
            np.asarray(self.vertices[i], dtype=np.float64),
            np.asarray(self.vertices[(i + 1) % n], dtype=np.float64),
            self.curvatures[i],
        )

    def validate(self):
        n = len(self.vertices)
        if not 3 <= n <= E_MAX:
            raise InvariantViolation(f"panel has {n} edges, expected 3..{E_MAX}")
        if len(self.curvatures) != n:
            raise InvariantViolation("curvature count must equal edge count")
        if not 0 <= self.class_id < NUM_CLASSES:
            raise InvariantViolation(f"class_id {self.class_id} out of range")
        v = self.vertex_array()
        if not np.isfinite(v).all():
            raise InvariantViolation("non-finite vertex")
        if _signed_area(v) <= 0:
            raise InvariantViolation("vertices must be counter-clockwise with positive area")
        if _self_intersects(v):
            raise InvariantViolation("panel polygon self-intersects")
        for c in self.curvatures:
            if c is not None and not (0.0 <= c[0] <= 1.0):
                raise InvariantViolation(f"curvature cx {c[0]} outside [0, 1]")


@dataclass(frozen=True)
class SewingPattern:
    panels: tuple  # of Panel
    stitches: tuple = ()  # of ((panel, edge), (panel, edge)) unordered pairs

    def validate(self):
        if len(self.panels) > NUM_CLASSES:
            raise InvariantViolation(f"{len(self.panels)} panels exceed {NUM_CLASSES}")
        for p in self.panels:
            p.validate()
        used = set()
        for a, b in self.stitches:
            for pi, ei in (tuple(a), tuple(b)):
                if not 0 <= pi < len(self.panels):
                    raise InvariantViolation(f"stitch references panel {pi}")
                if not 0 <= ei < self.panels[pi].num_edges:
                    raise InvariantViolation(f"stitch references edge {ei} of panel {pi}")
                if (pi, ei) in used:
                    raise InvariantViolation(f"edge ({pi}, {ei}) used by more than one stitch")
                used.add((pi, ei))


@dataclass(frozen=True)
class GarmentSample:
    points: np.ndarray  # (N, 3) centimeters
    pattern: SewingPattern
    garment_class: str
    panel_class_set: frozenset = field(default_factory=frozenset)

    def validate(self):
        if self.points.shape[0] < 512:
            raise InvariantViolation(f"need >= 512 points, got {self.points.shape[0]}")
        self.pattern.validate()
        for p in self.pattern.panels:
            if p.class_id not in self.panel_class_set:
                raise InvariantViolation(f"panel class {p.class_id} missing from class set")


@dataclass(frozen=True)
class MetricsReport:
    panel_l2: float
    num_panels_acc: float
    num_edges_acc: float
    rot_l2: float
    transl_l2: float
    stitch_precision: float
    stitch_recall: float
    panel_iou: float

    def as_dict(self):
        return {
            "panel_l2": self.panel_l2,
            "num_panels_acc": self.num_panels_acc,
            "num_edges_acc": self.num_edges_acc,
            "rot_l2": self.rot_l2,
            "transl_l2": self.transl_l2,
            "stitch_precision": self.stitch_precision,
            "stitch_recall": self.stitch_recall,
            "panel_iou": self.panel_iou,
        }


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _segments_cross(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _self_intersects(v):
    n = len(v)
    for i in range(n):
        for j in range(i + 1, n):
            # skip adjacent edges (they share an endpoint)
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return True
    return False
