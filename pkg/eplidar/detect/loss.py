"""Anchor/ground-truth matching and the detector training loss."""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from eplidar.geom import OrientedBox, bev_iou, box_contains_many, canonical_heading, inflate
from eplidar.nn import smooth_l1

from .anchors import ANCHOR_CATEGORIES, BOX_DIM, CLASS_INDEX, NUM_CLASSES, AnchorConfig, box_array, encode_boxes

IGNORE = -1
NEGATIVE_RATIO = 3
MIN_NEGATIVES = 16
REGRESSION_WEIGHT = 2.0
CONTAINMENT_INFLATION = 1.1

_SLOT_CATEGORY = {CLASS_INDEX[c]: c for c in ANCHOR_CATEGORIES}


@dataclass(frozen=True)
class AnchorTargets:
    labels: np.ndarray  # (K*A,) class index, 0 background, IGNORE for neither
    reg_targets: np.ndarray  # (K*A, 7), zero except on positives
    matched_gt: np.ndarray  # (K*A,) index into the ground truth, -1 if none
    best_iou: np.ndarray

    @property
    def positives(self) -> np.ndarray:
        return self.labels > 0

    @property
    def num_positive(self) -> int:
        return int(np.count_nonzero(self.labels > 0))


def _anchor_box(row: np.ndarray, slot_class: int) -> OrientedBox:
    return OrientedBox(*(float(v) for v in row), category=_SLOT_CATEGORY[slot_class])


def match_anchors(anchors: np.ndarray, keypoints: np.ndarray, gt_boxes: Sequence[OrientedBox],
                  config: AnchorConfig) -> AnchorTargets:
    """Label every anchor positive, negative or ignored against the annotated boxes.

    An anchor is positive for a box of its category when their BEV IoU reaches the category's
    positive threshold, or when its keypoint lies inside the (slightly inflated) box. It is
    negative when its best IoU is below ``config.negative_iou`` and no box contains its keypoint.
    """
    k, a = anchors.shape[:2]
    flat = anchors.reshape(-1, BOX_DIM)
    slot = np.tile(config.anchor_categories(), k)
    n = flat.shape[0]
    best_iou = np.zeros(n)
    matched = np.full(n, -1, dtype=np.int64)
    contained = np.zeros(n, dtype=bool)
    gts = [canonical_heading(b) for b in gt_boxes]
    anchor_radius = 0.5 * np.hypot(flat[:, 3], flat[:, 4])

    for j, gt in enumerate(gts):
        cls = CLASS_INDEX[gt.category]
        cand = np.nonzero(slot == cls)[0]
        dist = np.hypot(flat[cand, 0] - gt.cx, flat[cand, 1] - gt.cy)
        near = cand[dist <= anchor_radius[cand] + 0.5 * math.hypot(gt.w, gt.h)]
        for i in near:
            iou = bev_iou(_anchor_box(flat[i], cls), gt)
            if iou > best_iou[i]:
                best_iou[i] = iou
                matched[i] = j

    for j, gt in enumerate(gts):
        cls = CLASS_INDEX[gt.category]
        inside_kp = np.nonzero(box_contains_many(inflate(gt, CONTAINMENT_INFLATION), keypoints))[0]
        for kp in inside_kp:
            for i in range(kp * a, (kp + 1) * a):
                if slot[i] != cls:
                    continue
                if not contained[i] and best_iou[i] < config.positive_iou[gt.category]:
                    matched[i] = j
                contained[i] = True

    pos_thr = np.array([config.positive_iou[_SLOT_CATEGORY[int(c)]] for c in slot])
    positive = (matched >= 0) & ((best_iou >= pos_thr) | contained)
    negative = ~positive & ~contained & (best_iou < config.negative_iou)
    labels = np.full(n, IGNORE, dtype=np.int64)
    labels[negative] = 0
    labels[positive] = slot[positive]

    reg = np.zeros((n, BOX_DIM))
    if positive.any():
        gt_arr = box_array(gts)
        # decoded headings stop at max_heading; keep the targets reachable
        gt_arr[:, 6] = np.minimum(gt_arr[:, 6], config.max_heading)
        reg[positive] = encode_boxes(gt_arr[matched[positive]], flat[positive])
    return AnchorTargets(labels=labels, reg_targets=reg, matched_gt=matched, best_iou=best_iou)


@dataclass
class DetectorLoss:
    total: torch.Tensor
    classification: torch.Tensor
    regression: torch.Tensor
    num_positive: int
    num_negative: int


def detector_loss(cls_logits: torch.Tensor, reg: torch.Tensor, targets: AnchorTargets,
                  negative_ratio: int = NEGATIVE_RATIO, min_negatives: int = MIN_NEGATIVES,
                  regression_weight: float = REGRESSION_WEIGHT) -> DetectorLoss:
    """Cross-entropy over positives plus the hardest negatives, smooth-L1 on positives."""
    logits = cls_logits.reshape(-1, NUM_CLASSES)
    labels = torch.as_tensor(targets.labels)
    pos_idx = torch.nonzero(labels > 0).flatten()
    neg_idx = torch.nonzero(labels == 0).flatten()
    ce = F.cross_entropy(logits, labels.clamp(min=0), reduction="none")

    n_pos = int(pos_idx.numel())
    n_neg = min(int(neg_idx.numel()), max(negative_ratio * n_pos, min_negatives))
    hardest = torch.argsort(-ce[neg_idx].detach(), stable=True)[:n_neg]
    selected = torch.cat([pos_idx, neg_idx[hardest]])
    cls_loss = ce[selected].mean() if selected.numel() else logits.sum() * 0.0

    if n_pos:
        pred = reg.reshape(-1, BOX_DIM)[pos_idx]
        target = torch.as_tensor(targets.reg_targets[targets.positives], dtype=pred.dtype)
        reg_loss = smooth_l1(pred, target, reduction="sum") / n_pos
    else:
        reg_loss = reg.sum() * 0.0
    total = cls_loss + regression_weight * reg_loss
    return DetectorLoss(total, cls_loss, reg_loss, n_pos, n_neg)
