import numpy as np
import pytest
import torch

from eplidar.detect import MAX_HEADING, AnchorConfig, decode_boxes, detector_loss, make_anchors, match_anchors
from eplidar.detect.loss import IGNORE
from eplidar.nn import DTYPE
from tests.conftest import ped_box, vehicle_box


def _targets(gt, keypoints, cfg=None):
    cfg = cfg or AnchorConfig()
    return match_anchors(make_anchors(keypoints, cfg), keypoints, gt, cfg)


def test_keypoint_inside_box_makes_same_category_anchors_positive():
    gt = [ped_box(x=10.0, y=0.0)]
    t = _targets(gt, np.array([[10.0, 0.0, 0.9], [30.0, 10.0, 0.5]]))
    assert t.labels[:2].tolist() == [1, 1]
    assert t.labels[2:4].tolist() == [0, 0]
    assert t.labels[4:].tolist() == [0, 0, 0, 0]
    assert t.matched_gt[:2].tolist() == [0, 0]


def test_iou_match_without_containment():
    cfg = AnchorConfig()
    # keypoint above the box: only the ground anchor's overlap counts
    gt = [vehicle_box(heading=MAX_HEADING / 4).with_changes(w=3.0, h=3.0)]
    t = _targets(gt, np.array([[12.0, 3.0, 5.0]]), cfg)
    assert t.best_iou[2] == pytest.approx(1.0)
    assert t.labels[2] == 2
    assert t.labels[0] == 0


def test_middling_overlap_is_ignored():
    cfg = AnchorConfig()
    gt = [vehicle_box(heading=MAX_HEADING / 4).with_changes(w=3.0, h=3.0)]
    t = _targets(gt, np.array([[12.0, 4.2, 5.0]]), cfg)
    assert cfg.negative_iou < t.best_iou[2] < cfg.positive_iou[gt[0].category]
    assert t.labels[2] == IGNORE


def test_regression_targets_only_on_positives():
    t = _targets([ped_box()], np.array([[10.0, 0.0, 0.9], [20.0, 5.0, 0.0]]))
    assert np.all(t.reg_targets[~t.positives] == 0)
    assert np.any(t.reg_targets[t.positives] != 0)


def test_no_ground_truth_means_all_negative():
    t = _targets([], np.array([[1.0, 1.0, 0.0]]))
    assert t.labels.tolist() == [0, 0, 0, 0]
    assert t.num_positive == 0


def test_loss_balances_hard_negatives():
    keypoints = np.vstack([[10.0, 0.0, 0.9], np.column_stack([np.arange(20.0, 40.0), np.zeros(20), np.zeros(20)])])
    t = _targets([ped_box()], keypoints)
    n = t.labels.shape[0]
    cls_logits = torch.zeros(n // 4, 4, 3, dtype=DTYPE, requires_grad=True)
    reg = torch.zeros(n // 4, 4, 7, dtype=DTYPE, requires_grad=True)
    loss = detector_loss(cls_logits, reg, t)
    assert loss.num_positive == 2
    assert loss.num_negative == 16
    assert float(loss.classification) == pytest.approx(np.log(3.0))
    loss.total.backward()
    assert torch.count_nonzero(reg.grad) > 0


def test_loss_without_positives_is_finite():
    t = _targets([], np.array([[1.0, 1.0, 0.0]]))
    loss = detector_loss(torch.zeros(1, 4, 3, dtype=DTYPE), torch.zeros(1, 4, 7, dtype=DTYPE), t)
    assert loss.num_positive == 0
    assert float(loss.regression) == 0.0
    assert np.isfinite(float(loss.total))


def test_heading_targets_past_the_decode_limit_round_trip():
    cfg = AnchorConfig()
    gt = vehicle_box(heading=1.5705)
    keypoints = np.array([[gt.cx, gt.cy, gt.cz]])
    anchors = make_anchors(keypoints, cfg)
    t = match_anchors(anchors, keypoints, [gt], cfg)
    pos = t.positives
    assert pos.any()
    decoded = decode_boxes(t.reg_targets[pos], anchors.reshape(-1, 7)[pos], cfg.max_heading)
    expected = np.array(gt.with_changes(heading=MAX_HEADING).as_tuple())
    np.testing.assert_allclose(decoded, np.broadcast_to(expected, decoded.shape), rtol=0, atol=1e-12)
