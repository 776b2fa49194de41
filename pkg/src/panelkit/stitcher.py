"""Stitch prediction: candidate edge pairs by 3D proximity, a small
message-passing network over the candidate graph, and greedy matching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import tensor as T
from .nn.layers import MLP
from .nn.tensor import Tensor
from .pattern.bezier import control_point

FEATURE_SCALE = np.array([100.0] * 4 + [1.0, 1.0, 100.0] + [180.0] * 3 + [100.0] * 3)


@dataclass(frozen=True)
class EdgeNode:
    panel_index: int
    edge_index: int
    feature: np.ndarray      # (13,) start, end, curvature, length, rotation, translation
    midpoint_3d: np.ndarray  # (3,) cm


@dataclass(frozen=True)
class StitchScore:
    pair: tuple              # ((panel, edge), (panel, edge))
    score: float


def rotation_matrix(angles_deg):
    """Intrinsic X-Y-Z Euler rotation, degrees."""
    ax, ay, az = np.radians(angles_deg)
    cx, sx = np.cos(ax), np.sin(ax)
    cy, sy = np.cos(ay), np.sin(ay)
    cz, sz = np.cos(az), np.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rx @ ry @ rz


def place_points(points2d, rotation, translation):
    """Lift panel-local 2D points to z=0, rotate, translate."""
    pts = np.column_stack([points2d, np.zeros(len(points2d))])
    return pts @ rotation_matrix(rotation).T + np.asarray(translation, dtype=np.float64)


def drape_edges(pattern):
    """Per-edge 3D midpoints under each panel's placement."""
    midpoints = []
    for panel in pattern.panels:
        mids2d = []
        for i in range(panel.num_edges):
            s, e, c = panel.edge(i)
            ctrl = control_point(s, e, c)
            mids2d.append(0.25 * s + 0.5 * ctrl + 0.25 * e)  # Bezier at t = 0.5
        placed = place_points(np.asarray(mids2d), panel.rotation, panel.translation)
        midpoints.append(placed)
    return midpoints


def build_edge_graph(pattern, candidates=6):
    """Edge nodes plus each edge's c nearest other-panel edges as candidates."""
    mids = drape_edges(pattern)
    nodes = []
    for pi, panel in enumerate(pattern.panels):
        for ei in range(panel.num_edges):
            s, e, c = panel.edge(ei)
            c = c if c is not None else (0.5, 0.0)
            feature = np.concatenate(
                [
                    s,
                    e,
                    np.asarray(c, dtype=np.float64),
                    [np.linalg.norm(e - s)],
                    np.asarray(panel.rotation, dtype=np.float64),
                    np.asarray(panel.translation, dtype=np.float64),
                ]
            )
            nodes.append(
                EdgeNode(
                    panel_index=pi,
                    edge_index=ei,
                    feature=feature,
                    midpoint_3d=mids[pi][ei],
                )
            )
    pairs = set()
    if len(pattern.panels) > 1:
        positions = np.array([n.midpoint_3d for n in nodes])
        panel_of = np.array([n.panel_index for n in nodes])
        for i, node in enumerate(nodes):
            d = np.linalg.norm(positions - node.midpoint_3d, axis=1)
            d[panel_of == node.panel_index] = np.inf
            order = np.argsort(d, kind="stable")[:candidates]
            for j in order:
                if np.isfinite(d[j]):
                    pairs.add((min(i, int(j)), max(i, int(j))))
    return nodes, sorted(pairs)


class StitchNet:
    """Two message-passing rounds then a symmetric pair scorer."""

    def __init__(self, store, rng, rounds=2, width=64, prefix="stitch"):
        self.rounds = rounds
        self.encode = MLP(store, f"{prefix}/encode", [13, width, width], rng)
        self.msg = [
            MLP(store, f"{prefix}/msg{r}", [width, width], rng) for r in range(rounds)
        ]
        self.update = [
            MLP(store, f"{prefix}/update{r}", [2 * width, width], rng)
            for r in range(rounds)
        ]
        self.pair = MLP(store, f"{prefix}/pair", [2 * width, width, 1], rng)

    def node_embeddings(self, nodes, pairs):
        feats = np.array([n.feature for n in nodes]) / FEATURE_SCALE
        h = self.encode(Tensor(feats))
        n = len(nodes)
        # mean-aggregation adjacency over the candidate graph
        adj = np.zeros((n, n))
        for i, j in pairs:
            adj[i, j] = 1.0
            adj[j, i] = 1.0
        deg = adj.sum(axis=1, keepdims=True)
        deg[deg == 0] = 1.0
        mix = Tensor(adj / deg)
        for r in range(self.rounds):
            messages = T.matmul(mix, self.msg[r](h))
            h = self.update[r](T.concat([h, messages], axis=1))
        return h

    def score_pairs(self, nodes, pairs):
        """Sigmoid scores; symmetric by construction ([u+v, |u-v|] combiner)."""
        if not pairs:
            return [], None
        h = self.node_embeddings(nodes, pairs)
        ii = np.array([p[0] for p in pairs])
        jj = np.array([p[1] for p in pairs])
        hi = T.embedding(h, ii)
        hj = T.embedding(h, jj)
        combined = T.concat([hi + hj, T.abs_(hi - hj)], axis=1)
        logits = T.reshape(self.pair(combined), (-1,))
        return pairs, T.sigmoid(logits)


def gnn_score(net, nodes, pairs):
    pairs, probs = net.score_pairs(nodes, pairs)
    if probs is None:
        return []
    scores = []
    for (i, j), s in zip(pairs, probs.data):
        ref = (
            (nodes[i].panel_index, nodes[i].edge_index),
            (nodes[j].panel_index, nodes[j].edge_index),
        )
        scores.append(StitchScore(pair=ref, score=float(s)))
    return scores


def match_stitches(scores, threshold=0.5):
    """Greedy matching: best remaining score wins, one stitch per edge."""
    used = set()
    result = []
    ordered = sorted(scores, key=lambda s: (-s.score, s.pair))
    for item in ordered:
        if item.score <= threshold:
            continue
        a, b = item.pair
        if a in used or b in used:
            continue
        used.add(a)
        used.add(b)
        result.append((a, b))
    return result
