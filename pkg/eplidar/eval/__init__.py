from .matching import EVAL_IOU, MatchResult, match_detections, unmatched_gts
from .metrics import (
    ClassMetrics,
    ConfusionMatrix2,
    DetectionMetrics,
    PRCurve,
    average_precision,
    confusion_from_labels,
    evaluate_detections,
    overall_accuracy,
    per_class_metrics,
    pr_curve,
    precision_recall_f1,
)
from .report import (
    REFERENCE_MATRIX,
    ClassifierMetrics,
    DetectionSummary,
    MetricsReport,
    build_report,
    emit_report,
    published_reference_report,
    read_csv,
    read_json,
    render_text,
    write_csv,
    write_json,
)

__all__ = [
    "EVAL_IOU",
    "MatchResult",
    "match_detections",
    "unmatched_gts",
    "ClassMetrics",
    "ConfusionMatrix2",
    "DetectionMetrics",
    "PRCurve",
    "average_precision",
    "confusion_from_labels",
    "evaluate_detections",
    "overall_accuracy",
    "per_class_metrics",
    "pr_curve",
    "precision_recall_f1",
    "REFERENCE_MATRIX",
    "ClassifierMetrics",
    "DetectionSummary",
    "MetricsReport",
    "build_report",
    "emit_report",
    "published_reference_report",
    "read_csv",
    "read_json",
    "render_text",
    "write_csv",
    "write_json",
]
