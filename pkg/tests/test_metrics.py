"""Pattern metrics on hand-constructed predicted/truth pairs."""

import numpy as np
import pytest

from panelkit.pattern.metrics import average_report, pattern_metrics, stitch_pr
from panelkit.pattern.types import MetricsReport, Panel, SewingPattern


def square(class_id=0, size=10.0, shift=(0.0, 0.0), **kw):
    half = size / 2.0
    sx, sy = shift
    return Panel(
        class_id=class_id,
        vertices=(
            (sx - half, sy - half),
            (sx + half, sy - half),
            (sx + half, sy + half),
            (sx - half, sy + half),
        ),
        curvatures=(None,) * 4,
        **kw,
    )


def triangle(class_id=0):
    return Panel(class_id, ((0.0, 0.0), (6.0, 0.0), (3.0, 5.0)), (None,) * 3)


def test_identical_patterns_score_perfect():
    pat = SewingPattern((square(0), square(1)), (((0, 0), (1, 0)),))
    r = pattern_metrics(pat, pat)
    assert r.panel_l2 == 0.0
    assert r.num_panels_acc == 1.0
    assert r.num_edges_acc == 1.0
    assert r.rot_l2 == 0.0
    assert r.transl_l2 == 0.0
    assert r.stitch_precision == 1.0
    assert r.stitch_recall == 1.0
    assert r.panel_iou == 1.0


def test_uniform_outline_shift_gives_exact_l2():
    pred = SewingPattern((square(0, shift=(1.0, 0.0)),))
    truth = SewingPattern((square(0),))
    r = pattern_metrics(pred, truth)
    np.testing.assert_allclose(r.panel_l2, 1.0, atol=1e-12)


def test_translation_and_rotation_distances():
    pred = SewingPattern((square(0, rotation=(0.0, 10.0, 0.0), translation=(3.0, 4.0, 0.0)),))
    truth = SewingPattern((square(0),))
    r = pattern_metrics(pred, truth)
    np.testing.assert_allclose(r.rot_l2, 10.0)
    np.testing.assert_allclose(r.transl_l2, 5.0)


def test_panel_count_mismatch_zeroes_count_accuracy():
    pred = SewingPattern((square(0),))
    truth = SewingPattern((square(0), square(1)))
    r = pattern_metrics(pred, truth)
    assert r.num_panels_acc == 0.0


def test_missing_truth_panel_penalized_by_rms_norm():
    pred = SewingPattern(())
    truth = SewingPattern((square(0),))  # every vertex at distance sqrt(50)
    r = pattern_metrics(pred, truth)
    np.testing.assert_allclose(r.panel_l2, np.sqrt(50.0))
    assert r.num_edges_acc == 0.0
    assert r.panel_iou == 0.0


def test_spurious_predicted_panel_also_penalized():
    pred = SewingPattern((square(0), square(1)))
    truth = SewingPattern((square(0),))
    r = pattern_metrics(pred, truth)
    # matched panel contributes 0, unmatched its RMS norm; mean over 2 terms
    np.testing.assert_allclose(r.panel_l2, np.sqrt(50.0) / 2.0)


def test_edge_count_mismatch_uses_fixed_resampling():
    pred = SewingPattern((triangle(0),))
    truth = SewingPattern((square(0),))
    r = pattern_metrics(pred, truth)
    assert r.num_edges_acc == 0.0
    assert np.isfinite(r.panel_l2) and r.panel_l2 > 0.0


def test_stitch_pr_cases():
    s1 = (((0, 1), (1, 3)),)
    s2 = (((1, 3), (0, 1)),)  # same stitch, reversed order
    assert stitch_pr(s1, s2) == (1.0, 1.0)
    assert stitch_pr((), s1) == (1.0, 0.0)
    assert stitch_pr(s1, ()) == (0.0, 1.0)
    assert stitch_pr((), ()) == (1.0, 1.0)
    both = (((0, 1), (1, 3)), ((0, 0), (1, 0)))
    p, r = stitch_pr(both, s1)
    assert (p, r) == (0.5, 1.0)


def test_average_report_means_fields():
    a = MetricsReport(1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    b = MetricsReport(3.0, 0.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0)
    avg = average_report([a, b])
    assert avg.panel_l2 == 2.0
    assert avg.num_panels_acc == 0.5
    assert avg.transl_l2 == 2.0
    assert avg.panel_iou == 0.5


def test_average_report_empty_raises():
    with pytest.raises(ValueError):
        average_report([])


def test_iou_of_disjoint_shapes_is_low():
    # same class, very different sizes: IOU must drop well below 1
    pred = SewingPattern((square(0, size=4.0),))
    truth = SewingPattern((square(0, size=12.0),))
    r = pattern_metrics(pred, truth)
    assert r.panel_iou == pytest.approx((4 * 4) / (12 * 12), rel=0.2)
