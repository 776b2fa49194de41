"""Point-cloud encoders: local patch features and a global garment feature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewPoints
from .nn import tensor as T
from .nn.layers import MLP, SelfAttentionBlock
from .nn.tensor import Tensor


@dataclass(frozen=True)
class PatchSet:
    centers: np.ndarray      # (g, 3) cm
    groups: np.ndarray       # (g, k) point indices
    normalized: np.ndarray   # (g, k, 3) centered at each patch center


def farthest_point_sample(points, g, seed=0):
    """g indices maximizing minimum pairwise spread; first pick is seeded.

    Deterministic given the seed; distance ties break to the lowest index
    (numpy argmax takes the first maximum).
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n < 1 or g > n:
        raise TooFewPoints(f"need at least {g} points, got {n}")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    dist = np.linalg.norm(points - points[chosen[0]], axis=1)
    while len(chosen) < g:
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return np.asarray(chosen, dtype=np.int64)


def knn_group(points, center_indices, k):
    """Per center, the k nearest points (center included), ties by index."""
    points = np.asarray(points, dtype=np.float64)
    if k > len(points):
        raise TooFewPoints(f"k={k} exceeds {len(points)} points")
    centers = points[center_indices]
    groups = np.empty((len(center_indices), k), dtype=np.int64)
    for i, c in enumerate(centers):
        d = np.linalg.norm(points - c, axis=1)
        # stable sort keeps lowest-index ordering among equal distances
        groups[i] = np.argsort(d, kind="stable")[:k]
    normalized = points[groups] - centers[:, None, :]
    return PatchSet(centers=centers, groups=groups, normalized=normalized)


class PatchEmbedder:
    """Mini-PointNet: shared per-point MLP then max over each patch."""

    def __init__(self, store, config, rng, prefix="local"):
        self.mlp = MLP(store, f"{prefix}/pointnet", [3, 128, config.feature_dim], rng)

    def __call__(self, patchset):
        g, k, _ = patchset.normalized.shape
        flat = Tensor(patchset.normalized.reshape(g * k, 3))
        feats = self.mlp(flat)  # (g*k, D)
        d = feats.shape[-1]
        per_patch = T.reshape(feats, (g, k, d))
        return T.max_(per_patch, axis=1)  # (g, D)


def sinusoidal_encoding(coords, dim):
    """Sinusoidal features of (n, 3) coordinates, assumed roughly in [-1, 1]."""
    n = coords.shape[0]
    n_freq = max(dim // 6, 1)
    freqs = (2.0 ** np.arange(n_freq)) * np.pi
    ang = coords[:, :, None] * freqs[None, None, :]  # (n, 3, n_freq)
    enc = np.concatenate([np.sin(ang), np.cos(ang)], axis=2).reshape(n, -1)
    out = np.zeros((n, dim))
    out[:, : enc.shape[1]] = enc[:, :dim]
    return out


class GlobalEncoder:
    """Per-point embedding + positional encoding + 2 self-attention blocks.

    Coordinates are centered and the positional encoding is computed on
    bounding-box-normalized coordinates, so a rigid translation of the
    cloud leaves the output unchanged.
    """

    def __init__(self, store, config, rng, prefix="global"):
        d = config.feature_dim
        self.embed = MLP(store, f"{prefix}/embed", [3, d], rng)
        self.blocks = [
            SelfAttentionBlock(store, f"{prefix}/block{i}", d, config.heads, rng)
            for i in range(2)
        ]
        self.dim = d

    def __call__(self, points):
        points = np.asarray(points, dtype=np.float64)
        if len(points) < 8:
            raise TooFewPoints(f"global encoder needs >= 8 points, got {len(points)}")
        centered = points - points.mean(axis=0)
        extent = np.abs(centered).max(axis=0)
        extent[extent == 0] = 1.0
        pe = sinusoidal_encoding(centered / extent, self.dim)
        x = self.embed(Tensor(centered)) + Tensor(pe)
        for block in self.blocks:
            x = block(x)
        f_points = x
        f_global = T.mean(x, axis=0)
        return f_points, f_global
