"""End-to-end model forward/inference contracts and checkpointing."""

import numpy as np
import pytest

from panelkit.config import Config
from panelkit.errors import CheckpointMismatch
from panelkit.model import PatternModel
from panelkit.nn.checkpoint import load_arrays, save_arrays

RNG = np.random.default_rng(41)


def _tiny():
    return Config(
        num_points=48,
        num_patches=4,
        patch_k=4,
        feature_dim=16,
        prompt_raw_dim=24,
        num_classes=5,
        heads=2,
        ot_iters=100,
    )


@pytest.fixture(scope="module")
def model():
    return PatternModel(_tiny())


@pytest.fixture(scope="module")
def cloud():
    return np.random.default_rng(7).normal(size=(600, 3)) * 8.0


def test_forward_shapes(model, cloud):
    ins = model.prompts.encode_text([0, 2])
    out = model.forward(cloud, ins)
    m = model.config.num_classes
    assert out.f_loc.shape == (4, 16)
    assert out.f_global.shape == (16,)
    assert out.f_cm.shape == (m, 16)
    assert out.f_comp.shape == (m, 16)
    assert out.rotation.shape == (m, 3)
    assert out.translation.shape == (m, 3)
    assert out.confidence.shape == (m,)
    assert out.mask_probs.shape == (m, 32, 32)
    assert out.plan.f.shape == (4, 2)  # patches x active slots


def test_forward_without_active_slots_has_no_plan(model, cloud):
    out = model.forward(cloud, model.prompts.encode_text([]))
    assert out.plan is None and out.cost is None


def test_forward_deterministic(model, cloud):
    ins = model.prompts.encode_text([1])
    a = model.forward(cloud, ins)
    b = model.forward(cloud, ins)
    np.testing.assert_array_equal(a.confidence.data, b.confidence.data)
    np.testing.assert_array_equal(a.mask_probs.data, b.mask_probs.data)


def test_subsample_caps_point_count(model):
    pts = RNG.normal(size=(1000, 3))
    sub = model.subsample(pts)
    assert sub.shape == (48, 3)
    small = RNG.normal(size=(30, 3))
    np.testing.assert_array_equal(model.subsample(small), small)


def test_predictions_cover_every_slot(model, cloud):
    out = model.forward(cloud, model.prompts.encode_text([0]))
    preds = model.predictions(out)
    assert [p.slot for p in preds] == list(range(model.config.num_classes))


def test_infer_only_returns_instructed_classes(model, cloud):
    pattern, preds = model.infer(cloud, model.prompts.encode_text([1, 3]))
    assert len(preds) == model.config.num_classes
    assert {p.class_id for p in pattern.panels} <= {1, 3}


def test_checkpoint_round_trip(tmp_path, model, cloud):
    path = tmp_path / "m.ptck"
    model.prompts.prototypes = {0: RNG.normal(size=(24,))}
    model.save(path)
    loaded = PatternModel.load(path)
    assert loaded.config == model.config
    np.testing.assert_array_equal(
        loaded.prompts.prototypes[0], model.prompts.prototypes[0]
    )
    ins_a = model.prompts.encode_text([0, 2])
    ins_b = loaded.prompts.encode_text([0, 2])
    a = model.forward(cloud, ins_a)
    b = loaded.forward(cloud, ins_b)
    np.testing.assert_array_equal(a.mask_probs.data, b.mask_probs.data)
    np.testing.assert_array_equal(a.confidence.data, b.confidence.data)


def test_checkpoint_missing_config_rejected(tmp_path):
    path = tmp_path / "bad.ptck"
    save_arrays(path, {"some/param": np.zeros(3)})
    with pytest.raises(CheckpointMismatch):
        PatternModel.load(path)


def test_checkpoint_unknown_parameter_rejected(tmp_path, model):
    path = tmp_path / "extra.ptck"
    model.save(path)
    arrays = load_arrays(path)
    arrays["bogus/param"] = np.zeros(2)
    save_arrays(path, arrays)
    with pytest.raises(CheckpointMismatch):
        PatternModel.load(path)


def test_seeded_construction_is_reproducible(cloud):
    a = PatternModel(_tiny(), seed=11)
    b = PatternModel(_tiny(), seed=11)
    for name in a.store.names():
        np.testing.assert_array_equal(a.store[name].data, b.store[name].data)
