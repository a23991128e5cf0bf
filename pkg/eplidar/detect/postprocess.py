import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from eplidar.geom import Category, OrientedBox, iou_3d

from .anchors import CLASS_INDEX, MAX_HEADING
from .model import Proposals

logger = logging.getLogger(__name__)

_CATEGORY_OF = {v: k for k, v in CLASS_INDEX.items()}


@dataclass(frozen=True)
class Detection:
    box: OrientedBox
    score: float
    keypoint_index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"Detection score must be in [0, 1], got {self.score}")

    @property
    def category(self) -> Category:
        return self.box.category


def nms_3d(detections: Sequence[Detection], iou_threshold: float) -> List[Detection]:
    """Greedy per-category suppression by descending score; ties keep the lower keypoint index."""
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].score, detections[i].keypoint_index, i))
    kept: List[Detection] = []
    for i in order:
        det = detections[i]
        if all(k.category is not det.category or iou_3d(k.box, det.box) < iou_threshold for k in kept):
            kept.append(det)
    return kept


def select_detections(proposals: Proposals, score_threshold: float, iou_threshold: float,
                      pre_nms_top_k: int = 512) -> List[Detection]:
    keep = np.nonzero(proposals.scores >= score_threshold)[0]
    # stable sort so equal scores stay in keypoint order
    keep = keep[np.argsort(-proposals.scores[keep], kind="stable")][:pre_nms_top_k]
    candidates = []
    for i in keep:
        x, y, z, w, h, l, heading = (float(v) for v in proposals.boxes[i])
        box = OrientedBox(x, y, z, w, h, l, min(heading, MAX_HEADING), _CATEGORY_OF[int(proposals.classes[i])])
        candidates.append(Detection(box, float(np.clip(proposals.scores[i], 0.0, 1.0)), int(proposals.keypoint_index[i])))
    kept = nms_3d(candidates, iou_threshold)
    logger.debug(f"{len(keep)} proposals above {score_threshold}, {len(kept)} after NMS")
    return kept
