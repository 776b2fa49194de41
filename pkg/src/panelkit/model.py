"""End-to-end model: cloud encoders, prompt fusion, panel decoder, heads."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import Config
from .crossmodal import FusionBlock, cost_matrix, solve_transport
from .decoder import (
    ConfidenceHead,
    MaskHead,
    PanelDecoder,
    PanelPrediction,
    PlacementHead,
    SmoothHead,
    select_panels,
)
from .errors import CheckpointMismatch
from .nn import tensor as T
from .nn.checkpoint import load_arrays, save_arrays
from .nn.optim import ParameterStore
from .pointcloud import GlobalEncoder, PatchEmbedder, farthest_point_sample, knn_group
from .prompt import PromptEncoder


@dataclass
class ModelOutput:
    """Tape-connected forward results for one sample."""

    f_loc: object          # (g, D)
    f_global: object       # (D,)
    f_cm: object           # (M, D)
    f_comp: object         # (M, D)
    rotation: object       # (M, 3) degrees
    translation: object    # (M, 3) cm
    confidence: object     # (M,)
    mask_probs: object     # (M, H, W)
    plan: object           # TransportPlan or None (no active slots)
    cost: object           # CostMatrix or None


class PatternModel:
    def __init__(self, config=None, seed=None):
        self.config = config or Config()
        rng = np.random.default_rng(self.config.seed if seed is None else seed)
        self.store = ParameterStore()
        self.patch_embed = PatchEmbedder(self.store, self.config, rng)
        self.global_enc = GlobalEncoder(self.store, self.config, rng)
        self.prompts = PromptEncoder(self.store, self.config, rng)
        self.fusion = FusionBlock(self.store, self.config, rng)
        self.decoder = PanelDecoder(self.store, self.config, rng)
        self.place_head = PlacementHead(self.store, self.config, rng)
        self.conf_head = ConfidenceHead(self.store, self.config, rng)
        self.mask_head = MaskHead(self.store, self.config, rng)
        self.smooth_head = SmoothHead(self.store, self.config, rng)

    # -- encoding ------------------------------------------------------------

    def subsample(self, points):
        n = self.config.num_points
        points = np.asarray(points, dtype=np.float64)
        if len(points) <= n:
            return points
        idx = np.random.default_rng(self.config.seed).permutation(len(points))[:n]
        return points[idx]

    def encode_cloud(self, points):
        points = self.subsample(points)
        centers = farthest_point_sample(points, self.config.num_patches, self.config.seed)
        patches = knn_group(points, centers, self.config.patch_k)
        f_loc = self.patch_embed(patches)
        f_points, f_global = self.global_enc(points)
        return f_loc, f_points, f_global

    # -- full forward ---------------------------------------------------------

    def forward(self, points, instruction):
        f_loc, _, f_global = self.encode_cloud(points)
        active = instruction.active_indices()
        if len(active) > 0:
            p_active = T.embedding(instruction.features, active)
            cost = cost_matrix(p_active, f_loc)
            plan = solve_transport(
                cost, epsilon=self.config.ot_epsilon, iters=self.config.ot_iters
            )
        else:
            cost, plan = None, None
        f_cm = self.fusion(instruction.features, f_loc)
        f_comp = self.decoder(f_cm, f_global)
        rotation, translation = self.place_head(f_comp)
        confidence = self.conf_head(f_comp)
        mask_probs = self.mask_head(f_comp)
        return ModelOutput(
            f_loc=f_loc,
            f_global=f_global,
            f_cm=f_cm,
            f_comp=f_comp,
            rotation=rotation,
            translation=translation,
            confidence=confidence,
            mask_probs=mask_probs,
            plan=plan,
            cost=cost,
        )

    # -- inference -----------------------------------------------------------

    def predictions(self, output):
        """Detach a forward pass into per-slot PanelPredictions."""
        verts, curvs, validity = self.smooth_head(output.mask_probs)
        m = self.config.num_classes
        preds = []
        for j in range(m):
            preds.append(
                PanelPrediction(
                    slot=j,
                    mask_probs=output.mask_probs.data[j],
                    confidence=float(output.confidence.data[j]),
                    rotation=output.rotation.data[j].copy(),
                    translation=output.translation.data[j].copy(),
                    vertices=verts.data[j].copy(),
                    curvatures=curvs.data[j].copy(),
                    edge_validity=validity.data[j].copy(),
                )
            )
        return preds

    def infer(self, points, instruction):
        """Unstitched pattern for a cloud under the given instruction."""
        output = self.forward(points, instruction)
        preds = self.predictions(output)
        return select_panels(
            preds,
            instruction_active=instruction.active,
            threshold=self.config.confidence_threshold,
            k=self.config.top_k,
        ), preds

    # -- persistence ---------------------------------------------------------

    def save(self, path):
        arrays = {name: t.data for name, t in self.store.params.items()}
        for cid, proto in self.prompts.prototypes.items():
            arrays[f"__prototype__/{cid}"] = proto
        cfg_bytes = json.dumps(self.config.__dict__, sort_keys=True).encode("utf-8")
        arrays["__meta__/config"] = np.frombuffer(cfg_bytes, dtype=np.uint8).astype(
            np.float64
        )
        save_arrays(path, arrays)

    @classmethod
    def load(cls, path):
        arrays = load_arrays(path)
        if "__meta__/config" not in arrays:
            raise CheckpointMismatch(f"{path}: missing config record")
        cfg_doc = json.loads(
            arrays.pop("__meta__/config").astype(np.uint8).tobytes().decode("utf-8")
        )
        config = Config.from_dict(cfg_doc)
        model = cls(config)
        prototypes = {}
        for name in list(arrays):
            if name.startswith("__prototype__/"):
                prototypes[int(name.split("/", 1)[1])] = arrays.pop(name)
        model.prompts.prototypes = prototypes
        try:
            model.store.load_values(arrays)
        except KeyError as exc:
            raise CheckpointMismatch(str(exc)) from exc
        return model
