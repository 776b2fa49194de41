"""Run configuration: model dimensions, training recipe, inference knobs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields


@dataclass
class Config:
    # point cloud
    num_points: int = 256          # N: points sampled per garment cloud
    num_patches: int = 16          # g: FPS patch centers
    patch_k: int = 16              # k: neighbors per patch
    feature_dim: int = 64          # D: shared embedding width
    prompt_raw_dim: int = 512      # raw text/sketch embedding width before projection
    # decoder / heads
    num_classes: int = 23          # M: panel vocabulary size
    mask_size: int = 32            # H = W
    mask_scale: float = 1.0        # cm per mask pixel
    e_max: int = 8
    heads: int = 4
    rotation_range: float = 180.0  # degrees, placement head bound
    translation_range: float = 150.0  # cm, placement head bound
    # transport
    ot_epsilon: float = 0.05
    ot_iters: int = 200
    # training
    epochs: int = 250
    batch_size: int = 15
    learning_rate: float = 1e-3
    mask_loss_stop: float = 0.0    # stop when epoch-mean mask loss falls below (0 = off)
    place_loss_stop: float = 0.0   # extra stop condition on placement loss (0 = off)
    loss_weights: dict = field(
        default_factory=lambda: {
            "place": 1.0,
            "conf": 1.0,
            "mask": 1.0,
            "con": 1.0,
            "asso": 1.0,
        }
    )
    seed: int = 0
    standard_instruction_prob: float = 0.5  # share of steps trained all-slots-active
    prompt_mode: str = "mixed"     # text | sketch | mixed instruction sampling
    # stitcher
    stitch_candidates: int = 6     # c: nearest other-panel edges per edge
    stitch_rounds: int = 2
    stitch_width: int = 64
    stitch_epochs: int = 800
    stitch_lr: float = 3e-3
    stitch_use_gt_edges: bool = False
    # inference
    confidence_threshold: float = 0.5
    top_k: int = 14

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise KeyError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)
