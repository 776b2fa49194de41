"""Synthetic garment generator: determinism, validity, coverage, geometry."""

import numpy as np
import pytest

from panelkit.pattern.bezier import sample_boundary
from panelkit.prompt import PanelVocabulary
from panelkit.stitcher import place_points
from panelkit.synthetic import (
    ALL_FAMILIES,
    HOLDOUT_FAMILIES,
    POINT_NOISE_SIGMA,
    TRAIN_FAMILIES,
    build_pattern,
    draw_spec,
    generate_dataset,
    generate_sample,
)


def test_family_partition():
    assert set(TRAIN_FAMILIES) & set(HOLDOUT_FAMILIES) == set()
    assert set(ALL_FAMILIES) == set(TRAIN_FAMILIES) | set(HOLDOUT_FAMILIES)
    assert len(ALL_FAMILIES) == 8


def test_draw_spec_unknown_family():
    with pytest.raises(ValueError):
        draw_spec("cape", np.random.default_rng(0))


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_every_family_builds_a_valid_pattern(family):
    spec = draw_spec(family, np.random.default_rng(1))
    pattern = build_pattern(spec)
    pattern.validate()
    assert len(pattern.panels) >= 1
    assert len(pattern.stitches) >= 1


def test_generation_is_bitwise_deterministic():
    a = generate_dataset(("skirt-2p", "tee"), 4, seed=5)
    b = generate_dataset(("skirt-2p", "tee"), 4, seed=5)
    for sa, sb in zip(a, b):
        np.testing.assert_array_equal(sa.points, sb.points)
        assert sa.pattern == sb.pattern
        assert sa.garment_class == sb.garment_class


def test_different_seeds_differ():
    a = generate_dataset(("skirt-2p",), 1, seed=0)[0]
    b = generate_dataset(("skirt-2p",), 1, seed=1)[0]
    assert not np.array_equal(a.points, b.points)


def test_samples_validate_and_have_point_budget():
    for sample in generate_dataset(ALL_FAMILIES, 8, seed=2):
        sample.validate()
        assert sample.points.shape == (1024, 3)


def test_round_robin_family_order():
    ds = generate_dataset(("skirt-2p", "tee", "pants"), 6, seed=0)
    assert [s.garment_class for s in ds] == ["skirt-2p", "tee", "pants"] * 2


def test_all_families_cover_full_vocabulary():
    # one garment per family jointly exercises every panel class
    covered = set()
    for sample in generate_dataset(ALL_FAMILIES, len(ALL_FAMILIES), seed=0):
        covered |= set(sample.panel_class_set)
    assert covered == set(range(len(PanelVocabulary())))


def test_points_lie_near_draped_panel_surfaces():
    sample = generate_dataset(("skirt-4p",), 1, seed=7)[0]
    # dense oracle surface: interior approximated by dense boundary +
    # placed sample grid per panel
    surfaces = []
    for panel in sample.pattern.panels:
        boundary = sample_boundary(panel, per_edge=64)
        lo, hi = boundary.min(axis=0), boundary.max(axis=0)
        gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], 40), np.linspace(lo[1], hi[1], 40))
        grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
        surfaces.append(place_points(grid, panel.rotation, panel.translation))
    surface = np.concatenate(surfaces, axis=0)
    # every cloud point should be close to some surface point: noise sigma
    # 0.3 plus grid spacing slack
    d = np.linalg.norm(sample.points[:, None, :] - surface[None, :, :], axis=2).min(axis=1)
    assert np.mean(d) < 3.0 * POINT_NOISE_SIGMA
    assert np.percentile(d, 95) < 5.0 * POINT_NOISE_SIGMA


def test_panel_classes_match_vocabulary_names():
    vocab = PanelVocabulary()
    sample = generate_dataset(("tee",), 1, seed=0)[0]
    names = {vocab.name_of(p.class_id) for p in sample.pattern.panels}
    assert names == {"tee-front", "tee-back", "sleeve-left", "sleeve-right"}


def test_stitch_tables_reference_valid_edges():
    for family in ALL_FAMILIES:
        spec = draw_spec(family, np.random.default_rng(3))
        pattern = build_pattern(spec)
        for a, b in pattern.stitches:
            for pi, ei in (a, b):
                assert 0 <= pi < len(pattern.panels)
                assert 0 <= ei < pattern.panels[pi].num_edges
