"""Pedestrian instance extraction: label transfer by 3D IoU, cropping and canonicalisation."""

import logging
import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from eplidar.activity import ActivityClass, BinaryLabel
from eplidar.errors import EmptyInstance
from eplidar.geom import (
    Category,
    OrientedBox,
    PointCloud,
    box_contains_many,
    farthest_point_sampling,
    inflate,
    iou_3d,
    to_box_frame,
)
from eplidar.utils import derive_seed, make_rng

logger = logging.getLogger(__name__)

CANONICAL_POINTS = 256
MATCH_IOU = 0.65
CROP_INFLATION = 1.1
SOURCES = ("detections", "ground_truth")


@dataclass(frozen=True)
class LabeledMatch:
    detection_index: int
    gt_index: int  # -1 when nothing was matched
    match_iou: float
    activity: Optional[ActivityClass] = None

    @property
    def label(self) -> Optional[BinaryLabel]:
        return self.activity.binary if self.activity is not None else None


@dataclass(frozen=True)
class PedestrianInstance:
    instance_id: str
    points: PointCloud
    source_box: OrientedBox
    label: Optional[BinaryLabel]
    match_iou: float
    activity: Optional[ActivityClass] = None
    scene_id: str = ""
    frame_id: int = 0
    split: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.match_iou <= 1.0:
            raise ValueError(f"match_iou must be in [0, 1], got {self.match_iou}")
        # the threshold side is enforced by match_and_label
        if self.label is not None and self.match_iou <= 0.0:
            raise ValueError(f"Instance {self.instance_id}: a labeled instance needs a positive match_iou")
        if self.label is None and self.activity is not None:
            raise ValueError(f"Instance {self.instance_id}: unlabeled instance carries activity {self.activity.value}")

    @property
    def labeled(self) -> bool:
        return self.label is not None


@dataclass
class ExtractionStats:
    detections: int = 0
    labeled: int = 0
    unlabeled: int = 0
    empty: int = 0
    per_label: Dict[str, int] = field(default_factory=dict)

    def add(self, other: "ExtractionStats") -> None:
        self.detections += other.detections
        self.labeled += other.labeled
        self.unlabeled += other.unlabeled
        self.empty += other.empty
        for k, v in other.per_label.items():
            self.per_label[k] = self.per_label.get(k, 0) + v


def match_and_label(detections: Sequence[OrientedBox], gt_boxes: Sequence[OrientedBox],
                    threshold: float = MATCH_IOU) -> List[LabeledMatch]:
    """Greedy one-to-one matching by descending 3D IoU; one result per detection, in order.

    Only pedestrian boxes take part. A detection is labeled with its partner's activity when the
    pair's IoU reaches ``threshold``.
    """
    peds = [(j, g) for j, g in enumerate(gt_boxes) if g.category is Category.PEDESTRIAN]
    pairs = []
    for i, det in enumerate(detections):
        if det.category is not Category.PEDESTRIAN:
            continue
        for j, gt in peds:
            iou = iou_3d(det, gt)
            if iou > 0.0:
                pairs.append((-iou, i, j))
    pairs.sort()
    det_match: Dict[int, Tuple[int, float]] = {}
    taken = set()
    for neg_iou, i, j in pairs:
        if i in det_match or j in taken:
            continue
        det_match[i] = (j, -neg_iou)
        taken.add(j)

    out = []
    for i in range(len(detections)):
        j, iou = det_match.get(i, (-1, 0.0))
        activity = gt_boxes[j].activity if j >= 0 and iou >= threshold else None
        out.append(LabeledMatch(i, j, iou, activity))
    return out


def crop_and_normalize(cloud: PointCloud, box: OrientedBox, n: int = CANONICAL_POINTS,
                       seed: int = 0) -> PointCloud:
    """Points inside the 1.1x inflated box, in the box frame, resampled to exactly ``n``.

    Larger crops are thinned by FPS from index 0; smaller ones are padded with seeded uniform
    duplicates. Intensity is carried along.
    """
    inside = np.nonzero(box_contains_many(inflate(box, CROP_INFLATION), cloud.xyz))[0]
    if inside.size == 0:
        raise EmptyInstance(f"No points inside box at ({box.cx:.2f}, {box.cy:.2f}, {box.cz:.2f})")
    local = to_box_frame(cloud.subset(inside), box)
    m = len(local)
    if m > n:
        return local.subset(farthest_point_sampling(local, n, start=0))
    if m < n:
        extra = make_rng(seed).integers(0, m, size=n - m)
        return local.subset(np.concatenate([np.arange(m), extra]))
    return local


def _instance_seed(seed: int, scene_id: str, frame_id: int, index: int) -> int:
    return derive_seed(seed, zlib.crc32(scene_id.encode("utf-8")), frame_id, index)


def extract_frame_instances(cloud: PointCloud, detections: Sequence[OrientedBox], gt_boxes: Sequence[OrientedBox],
                            scene_id: str, frame_id: int, split: Optional[str] = None,
                            n: int = CANONICAL_POINTS, seed: int = 0,
                            threshold: float = MATCH_IOU) -> Tuple[List[PedestrianInstance], ExtractionStats]:
    """Crop every pedestrian detection of one frame; unlabeled crops are kept for diagnostics."""
    stats = ExtractionStats()
    instances = []
    peds = [d for d in detections if d.category is Category.PEDESTRIAN]
    for m in match_and_label(peds, gt_boxes, threshold):
        box = peds[m.detection_index]
        stats.detections += 1
        try:
            pts = crop_and_normalize(cloud, box, n, _instance_seed(seed, scene_id, frame_id, m.detection_index))
        except EmptyInstance:
            stats.empty += 1
            continue
        label = m.label
        if label is None:
            stats.unlabeled += 1
        else:
            stats.labeled += 1
            stats.per_label[label.value] = stats.per_label.get(label.value, 0) + 1
        instances.append(PedestrianInstance(
            instance_id=f"{scene_id}:{frame_id:06d}:{m.detection_index:03d}",
            points=pts,
            source_box=box,
            label=label,
            match_iou=min(1.0, m.match_iou),
            activity=m.activity,
            scene_id=scene_id,
            frame_id=frame_id,
            split=split,
        ))
    return instances, stats
