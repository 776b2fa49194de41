"""Pattern-level evaluation metrics."""

from __future__ import annotations

import numpy as np

from ..errors import PanelkitError
from .bezier import resample_outline_fixed, resample_panel_outline
from .raster import panel_iou as mask_iou
from .raster import rasterize_panel
from .types import E_MAX, MetricsReport

OUTLINE_SAMPLES_PER_EDGE = 10
IOU_RESOLUTION = (64, 64)


def _outline_distance(pred, truth):
    """Mean L2 between outlines resampled with curvature influence.

    Equal edge counts compare per-edge samples directly; otherwise both
    outlines are resampled to a common count in edge-parameter space.
    """
    if pred.num_edges == truth.num_edges:
        a = resample_panel_outline(pred, OUTLINE_SAMPLES_PER_EDGE)
        b = resample_panel_outline(truth, OUTLINE_SAMPLES_PER_EDGE)
    else:
        total = OUTLINE_SAMPLES_PER_EDGE * E_MAX
        a = resample_outline_fixed(pred, total)
        b = resample_outline_fixed(truth, total)
    return float(np.linalg.norm(a - b, axis=1).mean())


def _rms_vertex_norm(panel):
    v = panel.vertex_array()
    return float(np.sqrt((v ** 2).sum(axis=1).mean()))


def pattern_metrics(predicted, truth):
    """Panel/placement metrics between two patterns, matched by class id.

    Unmatched panels (either side) contribute their own RMS vertex norm
    as a Panel-L2 penalty and count as misses for the edge accuracy.
    """
    pred_by_class = {p.class_id: p for p in predicted.panels}
    true_by_class = {p.class_id: p for p in truth.panels}
    matched = sorted(set(pred_by_class) & set(true_by_class))

    l2_terms = []
    edge_hits = []
    rot_terms = []
    transl_terms = []
    iou_terms = []
    for cid in matched:
        p, t = pred_by_class[cid], true_by_class[cid]
        l2_terms.append(_outline_distance(p, t))
        edge_hits.append(1.0 if p.num_edges == t.num_edges else 0.0)
        rot_terms.append(np.linalg.norm(np.subtract(p.rotation, t.rotation)))
        transl_terms.append(np.linalg.norm(np.subtract(p.translation, t.translation)))
        iou_terms.append(_safe_panel_iou(p, t))
    for cid in set(true_by_class) - set(pred_by_class):
        l2_terms.append(_rms_vertex_norm(true_by_class[cid]))
        edge_hits.append(0.0)
        iou_terms.append(0.0)
    for cid in set(pred_by_class) - set(true_by_class):
        l2_terms.append(_rms_vertex_norm(pred_by_class[cid]))

    prec, rec = stitch_pr(predicted.stitches, truth.stitches)
    return MetricsReport(
        panel_l2=float(np.mean(l2_terms)) if l2_terms else 0.0,
        num_panels_acc=1.0 if len(predicted.panels) == len(truth.panels) else 0.0,
        num_edges_acc=float(np.mean(edge_hits)) if edge_hits else 0.0,
        rot_l2=float(np.mean(rot_terms)) if rot_terms else 0.0,
        transl_l2=float(np.mean(transl_terms)) if transl_terms else 0.0,
        stitch_precision=prec,
        stitch_recall=rec,
        panel_iou=float(np.mean(iou_terms)) if iou_terms else 0.0,
    )


def _safe_panel_iou(pred, truth, resolution=IOU_RESOLUTION, scale=1.0):
    try:
        a = rasterize_panel(pred, resolution, scale)
        b = rasterize_panel(truth, resolution, scale)
    except PanelkitError:
        return 0.0
    return mask_iou(a, b)


def _canon(stitch):
    a, b = stitch
    a, b = tuple(a), tuple(b)
    return (a, b) if a <= b else (b, a)


def stitch_pr(predicted, truth):
    """(precision, recall) over unordered edge pairs; vacuous cases are 1."""
    pred_set = {_canon(s) for s in predicted}
    true_set = {_canon(s) for s in truth}
    tp = len(pred_set & true_set)
    precision = tp / len(pred_set) if pred_set else 1.0
    recall = tp / len(true_set) if true_set else 1.0
    return float(precision), float(recall)


def average_report(reports):
    """Mean of every field over per-sample reports."""
    if not reports:
        raise ValueError("no reports to average")
    fields = reports[0].as_dict().keys()
    agg = {f: float(np.mean([r.as_dict()[f] for r in reports])) for f in fields}
    return MetricsReport(**agg)
