"""Panel decoder heads: bounds, shapes, and confidence-gated selection."""

import numpy as np
import pytest

from panelkit.config import Config
from panelkit.decoder import (
    ConfidenceHead,
    MaskHead,
    PanelDecoder,
    PanelPrediction,
    PlacementHead,
    SmoothHead,
    select_panels,
)
from panelkit.nn.optim import ParameterStore
from panelkit.nn.tensor import Tensor

RNG = np.random.default_rng(61)


def _config(**kw):
    base = dict(feature_dim=16, num_classes=6, heads=2, e_max=8, mask_size=32)
    base.update(kw)
    return Config(**base)


def _prediction(slot, confidence, valid_edges=4):
    e = 8
    validity = np.zeros(e)
    validity[:valid_edges] = 1.0
    angles = np.linspace(0, 2 * np.pi, valid_edges, endpoint=False)
    verts = np.zeros((e, 2))
    verts[:valid_edges, 0] = 5.0 * np.cos(angles)
    verts[:valid_edges, 1] = 5.0 * np.sin(angles)
    return PanelPrediction(
        slot=slot,
        mask_probs=np.zeros((32, 32)),
        confidence=confidence,
        rotation=np.zeros(3),
        translation=np.zeros(3),
        vertices=verts,
        curvatures=np.tile([0.5, 0.0], (e, 1)),
        edge_validity=validity,
    )


# -- heads -----------------------------------------------------------------------


def test_placement_head_respects_bounds():
    cfg = _config(rotation_range=180.0, translation_range=150.0)
    store = ParameterStore()
    head = PlacementHead(store, cfg, np.random.default_rng(0))
    f = Tensor(RNG.normal(size=(6, 16)) * 50.0)  # drive tanh to saturation
    rot, tr = head(f)
    assert rot.shape == (6, 3) and tr.shape == (6, 3)
    assert np.abs(rot.data).max() <= 180.0
    assert np.abs(tr.data).max() <= 150.0


def test_confidence_head_in_unit_interval():
    cfg = _config()
    head = ConfidenceHead(ParameterStore(), cfg, np.random.default_rng(0))
    conf = head(Tensor(RNG.normal(size=(6, 16)) * 10.0))
    assert conf.shape == (6,)
    assert (conf.data > 0).all() and (conf.data < 1).all()


def test_mask_head_shape_and_range():
    cfg = _config()
    head = MaskHead(ParameterStore(), cfg, np.random.default_rng(0))
    masks = head(Tensor(RNG.normal(size=(6, 16))))
    assert masks.shape == (6, 32, 32)
    assert (masks.data > 0).all() and (masks.data < 1).all()


def test_mask_head_rejects_other_resolutions():
    with pytest.raises(ValueError):
        MaskHead(ParameterStore(), _config(mask_size=64), np.random.default_rng(0))


def test_smooth_head_output_contracts():
    cfg = _config(mask_scale=1.0)
    head = SmoothHead(ParameterStore(), cfg, np.random.default_rng(0))
    masks = Tensor(RNG.uniform(0.0, 1.0, size=(3, 32, 32)))
    verts, curvs, validity = head(masks)
    assert verts.shape == (3, 8, 2)
    assert curvs.shape == (3, 8, 2)
    assert validity.shape == (3, 8)
    # vertices bounded by the mask half-extent (16 cm at scale 1)
    assert np.abs(verts.data).max() <= 16.0
    # curvature cx in [0, 1], cy in [-1, 1], validity in (0, 1)
    assert (curvs.data[:, :, 0] >= 0.0).all() and (curvs.data[:, :, 0] <= 1.0).all()
    assert np.abs(curvs.data[:, :, 1]).max() <= 1.0
    assert (validity.data > 0).all() and (validity.data < 1).all()


def test_decoder_shape_and_distinct_slots():
    cfg = _config()
    store = ParameterStore()
    dec = PanelDecoder(store, cfg, np.random.default_rng(0))
    f_cm = Tensor(np.zeros((6, 16)))  # equal inputs: positions must separate slots
    f_global = Tensor(RNG.normal(size=(16,)))
    out = dec(f_cm, f_global)
    assert out.shape == (6, 16)
    d = np.linalg.norm(out.data[:, None] - out.data[None, :], axis=2)
    assert d[np.triu_indices(6, 1)].min() > 1e-6


# -- prediction assembly -----------------------------------------------------------


def test_prediction_to_panel_uses_valid_prefix():
    pred = _prediction(slot=2, confidence=0.9, valid_edges=4)
    panel = pred.to_panel(class_id=2)
    assert panel.num_edges == 4
    assert panel.class_id == 2
    panel.validate()


def test_num_valid_edges_counts_over_half():
    pred = _prediction(0, 0.9, valid_edges=5)
    assert pred.num_valid_edges == 5


# -- selection ---------------------------------------------------------------------


def test_select_all_confident_truncates_to_k():
    preds = [_prediction(i, 0.9) for i in range(20)]
    pattern = select_panels(preds, threshold=0.5, k=14)
    assert len(pattern.panels) == 14
    # ties in confidence keep the lowest slots
    assert [p.class_id for p in pattern.panels] == list(range(14))


def test_select_none_above_threshold():
    preds = [_prediction(i, 0.1) for i in range(6)]
    assert select_panels(preds, threshold=0.5).panels == ()


def test_select_respects_instruction_mask():
    preds = [_prediction(i, 0.9) for i in range(6)]
    active = np.zeros(6, dtype=bool)
    active[[1, 4]] = True
    pattern = select_panels(preds, instruction_active=active, threshold=0.5)
    assert [p.class_id for p in pattern.panels] == [1, 4]


def test_select_drops_degenerate_edge_counts():
    good = _prediction(0, 0.9, valid_edges=4)
    bad = _prediction(1, 0.95, valid_edges=2)
    pattern = select_panels([good, bad], threshold=0.5)
    assert [p.class_id for p in pattern.panels] == [0]


def test_select_orders_panels_by_slot():
    preds = [_prediction(5, 0.7), _prediction(1, 0.9), _prediction(3, 0.8)]
    pattern = select_panels(preds, threshold=0.5)
    assert [p.class_id for p in pattern.panels] == [1, 3, 5]


def test_select_threshold_is_strict():
    pred = _prediction(0, 0.5)
    assert select_panels([pred], threshold=0.5).panels == ()
