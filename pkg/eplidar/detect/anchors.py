"""Anchor layout and the box <-> regression-target codec."""

from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from eplidar.geom import CATEGORY_EXTENTS, Category, OrientedBox

MAX_HEADING = 1.57
ANCHOR_CATEGORIES: Tuple[Category, ...] = (Category.PEDESTRIAN, Category.VEHICLE)
# class index 0 is background
CLASS_INDEX: Dict[Category, int] = {Category.PEDESTRIAN: 1, Category.VEHICLE: 2}
NUM_CLASSES = 3
BOX_DIM = 7
LOG_EXTENT_LIMIT = 20.0


@dataclass(frozen=True)
class AnchorConfig:
    extents: Dict[Category, Tuple[float, float, float]] = field(
        default_factory=lambda: dict(CATEGORY_EXTENTS)
    )
    heading_bins: int = 2
    max_heading: float = MAX_HEADING
    ground_z: float = 0.0
    score_threshold: float = 0.5
    nms_iou_threshold: float = 0.2
    positive_iou: Dict[Category, float] = field(
        default_factory=lambda: {Category.PEDESTRIAN: 0.35, Category.VEHICLE: 0.5}
    )
    negative_iou: float = 0.25

    def __post_init__(self):
        for cat in ANCHOR_CATEGORIES:
            ext = self.extents.get(cat)
            if ext is None or len(ext) != 3 or min(ext) <= 0:
                raise ValueError(f"Anchor extents for {cat.value} must be three positive numbers, got {ext}")
        if self.heading_bins < 1:
            raise ValueError(f"heading_bins must be >= 1, got {self.heading_bins}")
        if not 0 < self.max_heading <= np.pi / 2:
            raise ValueError(f"max_heading must be in (0, pi/2], got {self.max_heading}")

    @property
    def bin_centers(self) -> np.ndarray:
        return (np.arange(self.heading_bins) + 0.5) * self.max_heading / self.heading_bins

    @property
    def anchors_per_keypoint(self) -> int:
        return len(ANCHOR_CATEGORIES) * self.heading_bins

    def anchor_categories(self) -> np.ndarray:
        """Class index of each anchor slot at a keypoint."""
        return np.repeat([CLASS_INDEX[c] for c in ANCHOR_CATEGORIES], self.heading_bins)

    def template(self) -> np.ndarray:
        """(A, 7) anchors centred on the origin: x, y, z, w, h, l, heading."""
        rows = []
        for cat in ANCHOR_CATEGORIES:
            w, h, l = self.extents[cat]
            for theta in self.bin_centers:
                rows.append([0.0, 0.0, self.ground_z + l / 2.0, w, h, l, theta])
        return np.asarray(rows, dtype=np.float64)


def make_anchors(keypoints: np.ndarray, config: AnchorConfig) -> np.ndarray:
    """(K, A, 7) anchors on the ground below each keypoint."""
    kp = np.asarray(keypoints, dtype=np.float64).reshape(-1, 3)
    anchors = np.broadcast_to(config.template(), (kp.shape[0],) + config.template().shape).copy()
    anchors[:, :, 0] += kp[:, None, 0]
    anchors[:, :, 1] += kp[:, None, 1]
    return anchors


def box_array(boxes: Sequence[OrientedBox]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, BOX_DIM))
    return np.asarray([b.as_tuple() for b in boxes], dtype=np.float64)


def encode_boxes(boxes: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """Regression targets of ``boxes`` relative to ``anchors`` (both (..., 7))."""
    boxes = np.asarray(boxes, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)
    diag = np.hypot(anchors[..., 3], anchors[..., 4])
    out = np.empty(np.broadcast(boxes, anchors).shape)
    out[..., 0] = (boxes[..., 0] - anchors[..., 0]) / diag
    out[..., 1] = (boxes[..., 1] - anchors[..., 1]) / diag
    out[..., 2] = (boxes[..., 2] - anchors[..., 2]) / anchors[..., 5]
    out[..., 3:6] = np.log(boxes[..., 3:6] / anchors[..., 3:6])
    out[..., 6] = boxes[..., 6] - anchors[..., 6]
    return out


def decode_boxes(deltas: np.ndarray, anchors: np.ndarray, max_heading: float = MAX_HEADING) -> np.ndarray:
    deltas = np.asarray(deltas, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)
    diag = np.hypot(anchors[..., 3], anchors[..., 4])
    out = np.empty(np.broadcast(deltas, anchors).shape)
    out[..., 0] = anchors[..., 0] + deltas[..., 0] * diag
    out[..., 1] = anchors[..., 1] + deltas[..., 1] * diag
    out[..., 2] = anchors[..., 2] + deltas[..., 2] * anchors[..., 5]
    out[..., 3:6] = anchors[..., 3:6] * np.exp(np.clip(deltas[..., 3:6], -LOG_EXTENT_LIMIT, LOG_EXTENT_LIMIT))
    out[..., 6] = np.clip(anchors[..., 6] + deltas[..., 6], 0.0, max_heading)
    return out
