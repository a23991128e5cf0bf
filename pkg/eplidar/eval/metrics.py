import logging
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix

from eplidar.activity import BinaryLabel
from eplidar.geom import Category, OrientedBox

from .matching import EVAL_IOU, MatchResult, ScoredBox, match_detections

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PRCurve:
    recall: np.ndarray
    precision: np.ndarray
    scores: np.ndarray
    tp_counts: np.ndarray
    num_gt: int

    def __len__(self) -> int:
        return int(self.recall.size)


def pr_curve(result: MatchResult) -> PRCurve:
    """Sweep the score threshold from high to low (stable order for equal scores)."""
    order = np.argsort(-result.scores, kind="stable")
    tp = result.tp[order].astype(np.int64)
    ctp = np.cumsum(tp)
    cfp = np.cumsum(1 - tp)
    denom = max(result.num_gt, 1)
    recall = ctp / denom if result.num_gt else np.zeros_like(ctp, dtype=np.float64)
    precision = ctp / np.maximum(ctp + cfp, 1)
    return PRCurve(recall.astype(np.float64), precision.astype(np.float64), result.scores[order], ctp, result.num_gt)


def average_precision(curve: PRCurve) -> float:
    """All-point interpolated AP: sum of recall steps times the best precision at or beyond them."""
    if len(curve) == 0 or curve.num_gt == 0:
        logger.warning("Empty precision-recall curve; AP is 0")
        return 0.0
    envelope = np.maximum.accumulate(curve.precision[::-1])[::-1]
    steps = np.diff(np.concatenate([[0], curve.tp_counts]))
    # integer recall steps keep a perfect detector at exactly 1.0
    return float(min(1.0, np.sum(steps * envelope) / curve.num_gt))


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    undefined: Tuple[str, ...] = ()


def precision_recall_f1(tp: int, fp: int, fn: int) -> ClassMetrics:
    """Zero denominators give 0 and are listed in ``undefined``."""
    undefined = []
    if tp + fp == 0:
        undefined.append("precision")
    if tp + fn == 0:
        undefined.append("recall")
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    if p + r == 0:
        undefined.append("f1")
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    if undefined:
        logger.warning(f"Zero denominator for {', '.join(undefined)} (tp={tp}, fp={fp}, fn={fn}); reported as 0")
    return ClassMetrics(p, r, f1, int(tp), int(fp), int(fn), tuple(undefined))


@dataclass(frozen=True)
class ConfusionMatrix2:
    normal_normal: int
    normal_abnormal: int
    abnormal_normal: int
    abnormal_abnormal: int

    def __post_init__(self):
        if min(self.as_tuple()) < 0:
            raise ValueError(f"Confusion counts must be >= 0, got {self.as_tuple()}")

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.normal_normal, self.normal_abnormal, self.abnormal_normal, self.abnormal_abnormal)

    def as_array(self) -> np.ndarray:
        """Rows are true labels, columns predictions, both ordered (Normal, Abnormal)."""
        return np.array(self.as_tuple(), dtype=np.int64).reshape(2, 2)

    @property
    def total(self) -> int:
        return sum(self.as_tuple())

    def class_counts(self, label: BinaryLabel) -> Tuple[int, int, int]:
        m = self.as_array()
        k = label.index
        return int(m[k, k]), int(m[1 - k, k]), int(m[k, 1 - k])


def confusion_from_labels(y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionMatrix2:
    m = confusion_matrix(np.asarray(y_true), np.asarray(y_pred), labels=[0, 1])
    return ConfusionMatrix2(*(int(v) for v in m.reshape(-1)))


def per_class_metrics(cm: ConfusionMatrix2) -> Dict[BinaryLabel, ClassMetrics]:
    return {label: precision_recall_f1(*cm.class_counts(label)) for label in BinaryLabel}


def overall_accuracy(cm: ConfusionMatrix2) -> float:
    if cm.total == 0:
        raise ValueError("Overall accuracy of an empty confusion matrix is undefined")
    return (cm.normal_normal + cm.abnormal_abnormal) / cm.total


@dataclass(frozen=True)
class DetectionMetrics:
    category: Category
    ap: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    curve: PRCurve = field(repr=False, compare=False, default=None)


def evaluate_detections(frames: Sequence[Tuple[Sequence[ScoredBox], Sequence[OrientedBox]]], category: Category,
                        iou_threshold: float = EVAL_IOU, score_threshold: float = 0.0) -> DetectionMetrics:
    """AP over the full sweep; precision/recall/F1 at ``score_threshold``."""
    results = []
    for dets, gts in frames:
        d = [(b, s) for b, s in dets if b.category is category]
        g = [b for b in gts if b.category is category]
        results.append(match_detections(d, g, iou_threshold))
    merged = MatchResult.concat(results)
    curve = pr_curve(merged)
    ap = average_precision(curve)
    kept = merged.scores >= score_threshold
    tp = int(np.count_nonzero(merged.tp & kept))
    fp = int(np.count_nonzero(~merged.tp & kept))
    m = precision_recall_f1(tp, fp, merged.num_gt - tp)
    return DetectionMetrics(category, ap, m.precision, m.recall, m.f1, m.tp, m.fp, m.fn, curve)
