from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from eplidar.geom import OrientedBox, iou_3d

EVAL_IOU = 0.5

ScoredBox = Tuple[OrientedBox, float]


@dataclass(frozen=True)
class MatchResult:
    """Per-detection outcome, aligned with the input order."""

    scores: np.ndarray
    tp: np.ndarray  # bool
    matched_gt: np.ndarray  # -1 for false positives
    ious: np.ndarray
    num_gt: int

    @property
    def num_tp(self) -> int:
        return int(np.count_nonzero(self.tp))

    @property
    def num_fp(self) -> int:
        return int(self.tp.size - self.num_tp)

    @property
    def num_fn(self) -> int:
        return self.num_gt - self.num_tp

    @staticmethod
    def concat(results: Sequence["MatchResult"]) -> "MatchResult":
        if not results:
            return MatchResult(np.zeros(0), np.zeros(0, bool), np.zeros(0, np.int64), np.zeros(0), 0)
        return MatchResult(
            scores=np.concatenate([r.scores for r in results]),
            tp=np.concatenate([r.tp for r in results]),
            matched_gt=np.concatenate([r.matched_gt for r in results]),
            ious=np.concatenate([r.ious for r in results]),
            num_gt=sum(r.num_gt for r in results),
        )


def match_detections(detections: Sequence[ScoredBox], gts: Sequence[OrientedBox],
                     iou_threshold: float = EVAL_IOU) -> MatchResult:
    """Greedy by descending score: each detection takes the best unmatched GT at IoU >= threshold."""
    n = len(detections)
    scores = np.array([float(s) for _, s in detections], dtype=np.float64)
    tp = np.zeros(n, dtype=bool)
    matched = np.full(n, -1, dtype=np.int64)
    ious = np.zeros(n)
    free = [True] * len(gts)
    for i in np.argsort(-scores, kind="stable"):
        box = detections[int(i)][0]
        best_j, best_iou = -1, iou_threshold
        for j, gt in enumerate(gts):
            if not free[j]:
                continue
            iou = iou_3d(box, gt)
            if iou >= best_iou and (best_j < 0 or iou > best_iou):
                best_j, best_iou = j, iou
        if best_j >= 0:
            free[best_j] = False
            tp[i], matched[i], ious[i] = True, best_j, best_iou
    return MatchResult(scores, tp, matched, ious, len(gts))


def unmatched_gts(result: MatchResult) -> List[int]:
    taken = set(int(j) for j in result.matched_gt if j >= 0)
    return [j for j in range(result.num_gt) if j not in taken]
