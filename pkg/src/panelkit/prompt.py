"""Per-panel instruction features: the K-slot personalization interface.

Every instruction is an (M, D) matrix with the prompt feature at active
slots and exact zero rows elsewhere, plus a per-slot source tag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySketch,
    MissingClass,
    MissingPrototype,
    UnknownClass,
)
from .nn import tensor as T
from .nn.layers import MLP
from .nn.tensor import Tensor

PANEL_CLASS_NAMES = (
    "skirt-front",
    "skirt-back",
    "skirt-quarter-front-left",
    "skirt-quarter-front-right",
    "skirt-quarter-back-left",
    "skirt-quarter-back-right",
    "tee-front",
    "tee-back",
    "sleeve-left",
    "sleeve-right",
    "tank-front",
    "tank-back",
    "pant-front-left",
    "pant-front-right",
    "pant-back-left",
    "pant-back-right",
    "dress-front",
    "dress-back",
    "jacket-front-left",
    "jacket-front-right",
    "jacket-back",
    "waistband-front",
    "waistband-back",
)

PROMPT_TEMPLATE = "Garment {name}"
SKETCH_RESAMPLE_POINTS = 64


class PanelVocabulary:
    """Ordered panel-class names with bidirectional name/index maps."""

    def __init__(self, names=PANEL_CLASS_NAMES):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError("panel class names must be unique")
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}

    def __len__(self):
        return len(self.names)

    def index_of(self, name):
        if name not in self._index:
            raise UnknownClass(name)
        return self._index[name]

    def name_of(self, idx):
        if not 0 <= idx < len(self.names):
            raise UnknownClass(f"class index {idx}")
        return self.names[idx]

    def prompt_text(self, idx):
        return PROMPT_TEMPLATE.format(name=self.name_of(idx))


@dataclass
class InstructionSet:
    active: np.ndarray                 # (M,) bool
    features: object                   # (M, D) Tensor; zero rows where inactive
    source: tuple = ()                 # per-slot tag: text | sketch | external | null

    @property
    def num_active(self):
        return int(self.active.sum())

    def active_indices(self):
        return np.flatnonzero(self.active)


@dataclass(frozen=True)
class SketchPrompt:
    """Polyline strokes in the unit box, each assigned to a panel class."""

    strokes: tuple                     # of (n_i, 2) arrays
    class_index: int

    def validate(self):
        total = sum(len(s) for s in self.strokes)
        if not self.strokes or total < 3:
            raise EmptySketch(f"sketch has {total} points, need >= 3")
        for s in self.strokes:
            arr = np.asarray(s)
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise EmptySketch("sketch coordinates must lie in [0, 1]")


def resample_polyline(stroke, n=SKETCH_RESAMPLE_POINTS):
    """Arc-length resampling of a polyline to exactly n points."""
    stroke = np.asarray(stroke, dtype=np.float64)
    if len(stroke) == 1:
        return np.repeat(stroke, n, axis=0)
    seg = np.linalg.norm(np.diff(stroke, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0.0:
        return np.repeat(stroke[:1], n, axis=0)
    s = np.linspace(0.0, cum[-1], n)
    x = np.interp(s, cum, stroke[:, 0])
    y = np.interp(s, cum, stroke[:, 1])
    return np.stack([x, y], axis=1)


class PromptEncoder:
    """Text table + polyline sketch encoder sharing one projection MLP."""

    def __init__(self, store, config, rng, prefix="prompt"):
        m = config.num_classes
        raw = config.prompt_raw_dim
        d = config.feature_dim
        self.config = config
        self.table = store.add(
            f"{prefix}/class_table", rng.normal(0.0, 1.0, size=(m, raw))
        )
        self.sketch_mlp = MLP(store, f"{prefix}/sketch_point", [2, 64, raw], rng)
        self.project = MLP(store, f"{prefix}/project", [raw, d], rng)
        self.prototypes = {}  # class index -> raw (prompt_raw_dim,) vector

    # -- raw (pre-projection) features --------------------------------------

    def _raw_text(self, class_index):
        return T.embedding(self.table, np.asarray([class_index]))

    def _raw_sketch(self, sketch):
        sketch.validate()
        pts = np.concatenate(
            [resample_polyline(s) for s in sketch.strokes], axis=0
        )
        per_point = self.sketch_mlp(Tensor(pts))
        return T.mean(per_point, axis=0, keepdims=True)  # (1, raw)

    # -- instruction constructors --------------------------------------------

    def _instruction(self, rows, sources):
        """rows: dict class index -> (1, raw) Tensor of raw prompt features."""
        m = self.config.num_classes
        d = self.config.feature_dim
        active = np.zeros(m, dtype=bool)
        source = ["null"] * m
        if not rows:
            return InstructionSet(
                active=active, features=Tensor(np.zeros((m, d))), source=tuple(source)
            )
        order = sorted(rows)
        projected = self.project(T.concat([rows[i] for i in order], axis=0))
        # scatter projected rows into the M-slot matrix via a constant matrix
        scatter = np.zeros((m, len(order)))
        for j, i in enumerate(order):
            scatter[i, j] = 1.0
            active[i] = True
            source[i] = sources[i]
        features = T.matmul(Tensor(scatter), projected)
        return InstructionSet(active=active, features=features, source=tuple(source))

    def encode_text(self, class_indices):
        m = self.config.num_classes
        for i in class_indices:
            if not 0 <= i < m:
                raise UnknownClass(f"class index {i}")
        rows = {int(i): self._raw_text(int(i)) for i in class_indices}
        return self._instruction(rows, {i: "text" for i in rows})

    def encode_sketch(self, sketches):
        """One SketchPrompt per slot; accepts a single prompt or a list."""
        if isinstance(sketches, SketchPrompt):
            sketches = [sketches]
        rows = {}
        for sk in sketches:
            rows[int(sk.class_index)] = self._raw_sketch(sk)
        return self._instruction(rows, {i: "sketch" for i in rows})

    def load_external_embeddings(self, path, class_indices, vocabulary):
        with open(path) as fh:
            doc = json.load(fh)
        dim = int(doc.get("dim", -1))
        if dim != self.config.prompt_raw_dim:
            raise DimensionMismatch(
                f"file dim {dim} != expected {self.config.prompt_raw_dim}"
            )
        vectors = doc.get("vectors", {})
        rows = {}
        for i in class_indices:
            name = vocabulary.name_of(int(i))
            if name not in vectors:
                raise MissingClass(name)
            vec = np.asarray(vectors[name], dtype=np.float64)
            if vec.shape != (dim,):
                raise DimensionMismatch(f"{name}: vector length {vec.shape}")
            rows[int(i)] = Tensor(vec[None, :])
        return self._instruction(rows, {i: "external" for i in rows})

    # -- standard (all-active) instructions ----------------------------------

    def build_prototypes(self, sketches_by_class):
        """Mean raw sketch embedding per class over training sketches."""
        self.prototypes = {}
        for cid, sketches in sketches_by_class.items():
            raws = [self._raw_sketch(sk).data[0] for sk in sketches]
            self.prototypes[int(cid)] = np.mean(raws, axis=0)
        return self.prototypes

    def build_standard_instruction(self, mode="text"):
        m = self.config.num_classes
        if mode == "text":
            return self.encode_text(range(m))
        if mode != "sketch":
            raise ValueError(f"unknown instruction mode {mode!r}")
        rows = {}
        for i in range(m):
            if i not in self.prototypes:
                raise MissingPrototype(f"no sketch prototype for class {i}")
            rows[i] = Tensor(self.prototypes[i][None, :])
        return self._instruction(rows, {i: "sketch" for i in rows})
