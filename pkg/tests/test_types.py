"""Domain type invariants for panels, patterns, and samples."""

import numpy as np
import pytest

from panelkit.errors import InvariantViolation
from panelkit.pattern.types import E_MAX, GarmentSample, NUM_CLASSES, Panel, SewingPattern


def square(class_id=0, size=10.0, **kw):
    half = size / 2.0
    return Panel(
        class_id=class_id,
        vertices=((-half, -half), (half, -half), (half, half), (-half, half)),
        curvatures=(None, None, None, None),
        **kw,
    )


def test_valid_square_passes():
    square().validate()


def test_panel_edge_accessor_wraps():
    p = square()
    s, e, c = p.edge(3)
    np.testing.assert_array_equal(s, [-5.0, 5.0])
    np.testing.assert_array_equal(e, [-5.0, -5.0])
    assert c is None


def test_clockwise_vertices_rejected():
    p = Panel(
        class_id=0,
        vertices=((-5, -5), (-5, 5), (5, 5), (5, -5)),  # negative signed area
        curvatures=(None,) * 4,
    )
    with pytest.raises(InvariantViolation):
        p.validate()


def test_too_few_or_many_edges_rejected():
    with pytest.raises(InvariantViolation):
        Panel(0, ((0, 0), (1, 0)), (None, None)).validate()
    n = E_MAX + 1
    angles = np.linspace(0, 2 * np.pi, n, endpoint=False)
    verts = tuple((float(np.cos(a)), float(np.sin(a))) for a in angles)
    with pytest.raises(InvariantViolation):
        Panel(0, verts, (None,) * n).validate()


def test_curvature_count_must_match():
    with pytest.raises(InvariantViolation):
        Panel(0, ((0, 0), (1, 0), (0, 1)), (None, None)).validate()


def test_class_id_range():
    with pytest.raises(InvariantViolation):
        square(class_id=NUM_CLASSES).validate()
    with pytest.raises(InvariantViolation):
        square(class_id=-1).validate()


def test_self_intersection_rejected():
    bowtie = Panel(
        class_id=0,
        vertices=((0, 0), (4, 4), (4, 0), (0, 4)),
        curvatures=(None,) * 4,
    )
    with pytest.raises(InvariantViolation):
        bowtie.validate()


def test_curvature_cx_out_of_unit_interval_rejected():
    p = Panel(
        class_id=0,
        vertices=((-5, -5), (5, -5), (5, 5), (-5, 5)),
        curvatures=((1.5, 0.2), None, None, None),
    )
    with pytest.raises(InvariantViolation):
        p.validate()


def test_non_finite_vertex_rejected():
    p = Panel(0, ((0, 0), (np.nan, 0), (0, 1)), (None,) * 3)
    with pytest.raises(InvariantViolation):
        p.validate()


def test_pattern_stitch_edge_reuse_rejected():
    pattern = SewingPattern(
        panels=(square(0), square(1)),
        stitches=(((0, 0), (1, 0)), ((0, 0), (1, 1))),
    )
    with pytest.raises(InvariantViolation):
        pattern.validate()


def test_pattern_stitch_bad_panel_or_edge_rejected():
    with pytest.raises(InvariantViolation):
        SewingPattern((square(0),), (((0, 0), (5, 1)),)).validate()
    with pytest.raises(InvariantViolation):
        SewingPattern((square(0), square(1)), (((0, 0), (1, 7)),)).validate()


def test_valid_pattern_with_stitches():
    SewingPattern(
        panels=(square(0), square(1)),
        stitches=(((0, 0), (1, 0)), ((0, 2), (1, 2))),
    ).validate()


def test_sample_needs_512_points_and_consistent_class_set():
    pattern = SewingPattern((square(3),))
    good = GarmentSample(
        points=np.zeros((512, 3)),
        pattern=pattern,
        garment_class="test",
        panel_class_set=frozenset({3}),
    )
    good.validate()
    with pytest.raises(InvariantViolation):
        GarmentSample(np.zeros((100, 3)), pattern, "test", frozenset({3})).validate()
    with pytest.raises(InvariantViolation):
        GarmentSample(np.zeros((512, 3)), pattern, "test", frozenset({1})).validate()
