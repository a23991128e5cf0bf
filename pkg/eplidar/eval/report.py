"""MetricsReport assembly and its text / CSV / SVG / JSON renderings."""

import io
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from eplidar.activity import BinaryLabel

from .metrics import (
    ClassMetrics,
    ConfusionMatrix2,
    DetectionMetrics,
    overall_accuracy,
    per_class_metrics,
)

logger = logging.getLogger(__name__)

FORMATS = ("text", "csv", "svg")
CSV_COLUMNS = ["metric", "category", "model", "value"]
REFERENCE_MATRIX = ConfusionMatrix2(2437, 257, 447, 1233)
MODEL_TITLES = {"pointnet": "PointNet", "voxel_mlp": "Voxel-Based MLP", "reference": "PointNet (published)"}

PathLike = Union[str, os.PathLike]


@dataclass
class ClassifierMetrics:
    model: str
    confusion: ConfusionMatrix2
    accuracy: float = field(init=False)
    per_class: Dict[BinaryLabel, ClassMetrics] = field(init=False)

    def __post_init__(self):
        self.accuracy = overall_accuracy(self.confusion)
        self.per_class = per_class_metrics(self.confusion)


@dataclass
class DetectionSummary:
    """DetectionMetrics without the curve arrays, plus the curve points for plotting."""

    category: str
    ap: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    curve_recall: List[float] = field(default_factory=list)
    curve_precision: List[float] = field(default_factory=list)

    @classmethod
    def from_metrics(cls, m: DetectionMetrics) -> "DetectionSummary":
        curve = m.curve
        return cls(
            m.category.value, m.ap, m.precision, m.recall, m.f1, m.tp, m.fp, m.fn,
            [float(v) for v in curve.recall] if curve is not None else [],
            [float(v) for v in curve.precision] if curve is not None else [],
        )


@dataclass
class MetricsReport:
    detection: Dict[str, DetectionSummary] = field(default_factory=dict)
    classifiers: Dict[str, ClassifierMetrics] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for d in self.detection.values():
            for v in (d.ap, d.precision, d.recall, d.f1):
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"Detection ratio {v} for {d.category} outside [0, 1]")

    # ---------- JSON ----------
    def to_dict(self) -> Dict[str, Any]:
        return {
            "detection": {k: vars(v) for k, v in self.detection.items()},
            "classifiers": {k: list(v.confusion.as_tuple()) for k, v in self.classifiers.items()},
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "MetricsReport":
        return cls(
            detection={k: DetectionSummary(**v) for k, v in d.get("detection", {}).items()},
            classifiers={k: ClassifierMetrics(k, ConfusionMatrix2(*v)) for k, v in d.get("classifiers", {}).items()},
            config=d.get("config", {}),
        )

    # ---------- flat rows ----------
    def rows(self) -> List[Dict[str, Any]]:
        rows = []
        for cat, d in self.detection.items():
            for metric in ("ap", "precision", "recall", "f1"):
                rows.append({"metric": metric, "category": cat, "model": "detector", "value": getattr(d, metric)})
        for model, c in self.classifiers.items():
            rows.append({"metric": "accuracy", "category": "All", "model": model, "value": c.accuracy})
            for label, m in c.per_class.items():
                for metric in ("precision", "recall", "f1"):
                    rows.append({"metric": metric, "category": label.value, "model": model,
                                 "value": getattr(m, metric)})
            for name, count in zip(("true_normal_pred_normal", "true_normal_pred_abnormal",
                                    "true_abnormal_pred_normal", "true_abnormal_pred_abnormal"),
                                   c.confusion.as_tuple()):
                rows.append({"metric": name, "category": "All", "model": model, "value": float(count)})
        return rows


def published_reference_report() -> MetricsReport:
    """The published PointNet confusion counts, rendered through the same report path."""
    return MetricsReport(
        classifiers={"reference": ClassifierMetrics("reference", REFERENCE_MATRIX)},
        config={"source": "published confusion matrix (Normal/Abnormal)"},
    )


def write_json(report: MetricsReport, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
    return path


def read_json(path: PathLike) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------- text ----------

def _pct(v: float) -> str:
    return f"{100.0 * v:6.2f}%"


def render_text(report: MetricsReport) -> str:
    out = io.StringIO()
    if report.detection:
        out.write("3D object detection\n")
        out.write(f"{'Category':<12}{'AP':>9}{'Precision':>11}{'Recall':>9}{'F1':>9}\n")
        for d in report.detection.values():
            out.write(f"{d.category:<12}{_pct(d.ap):>9}{_pct(d.precision):>11}{_pct(d.recall):>9}{_pct(d.f1):>9}\n")
        out.write("\n")
    if report.classifiers:
        out.write("Overall accuracy comparison\n")
        out.write(f"{'Model':<24}{'Accuracy':>10}\n")
        for key, c in report.classifiers.items():
            out.write(f"{MODEL_TITLES.get(key, key):<24}{_pct(c.accuracy):>10}\n")
        out.write("\n")
        out.write("Per-class results\n")
        out.write(f"{'Model':<24}{'Class':<10}{'Precision':>11}{'Recall':>9}{'F1':>9}\n")
        for key, c in report.classifiers.items():
            for label, m in c.per_class.items():
                out.write(f"{MODEL_TITLES.get(key, key):<24}{label.value:<10}"
                          f"{_pct(m.precision):>11}{_pct(m.recall):>9}{_pct(m.f1):>9}\n")
        out.write("\n")
        for key, c in report.classifiers.items():
            nn_, na, an, aa = c.confusion.as_tuple()
            out.write(f"Confusion matrix, {MODEL_TITLES.get(key, key)} (rows true, columns predicted)\n")
            out.write(f"{'':<10}{'Normal':>10}{'Abnormal':>10}\n")
            out.write(f"{'Normal':<10}{nn_:>10}{na:>10}\n{'Abnormal':<10}{an:>10}{aa:>10}\n")
            out.write(f"Total instances: {c.confusion.total}\n\n")
    return out.getvalue()


# ---------- CSV ----------

def write_csv(report: MetricsReport, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(report.rows(), columns=CSV_COLUMNS).to_csv(path, index=False)
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, dtype={"metric": str, "category": str, "model": str, "value": float})


# ---------- SVG ----------

def _svg_style():
    return {
        "svg.fonttype": "none",
        "svg.hashsalt": "eplidar",
        "font.family": "DejaVu Sans",
        "figure.dpi": 72,
    }


def _save_svg(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def write_pr_svg(report: MetricsReport, path: PathLike) -> Path:
    path = Path(path)
    with plt.rc_context(_svg_style()):
        fig, ax = plt.subplots(figsize=(5, 4))
        for d in report.detection.values():
            r = [0.0] + list(d.curve_recall)
            p = [1.0] + list(d.curve_precision)
            ax.step(r, p, where="post", label=f"{d.category} (AP {100 * d.ap:.1f}%)")
        ax.set_xlim(0, 1.02)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("Recall")
        ax.set_ylabel("Precision")
        ax.set_title("Precision-Recall")
        if report.detection:
            ax.legend(loc="lower left")
        fig.tight_layout()
        return _save_svg(fig, path)


def write_confusion_svg(metrics: ClassifierMetrics, path: PathLike) -> Path:
    path = Path(path)
    m = metrics.confusion.as_array()
    with plt.rc_context(_svg_style()):
        fig, ax = plt.subplots(figsize=(4, 3.5))
        ax.imshow(m, cmap="Blues")
        labels = [b.value for b in BinaryLabel]
        ax.set_xticks([0, 1], labels)
        ax.set_yticks([0, 1], labels)
        ax.set_xlabel("Predicted")
        ax.set_ylabel("True")
        ax.set_title(f"Confusion matrix: {MODEL_TITLES.get(metrics.model, metrics.model)}")
        peak = max(int(m.max()), 1)
        for (i, j), v in np.ndenumerate(m):
            ax.text(j, i, str(int(v)), ha="center", va="center", color="white" if v > peak / 2 else "black")
        fig.tight_layout()
        return _save_svg(fig, path)


def emit_report(report: MetricsReport, out_dir: PathLike, formats: Sequence[str] = FORMATS,
                prefix: str = "report") -> List[Path]:
    out_dir = Path(out_dir)
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"Unknown report formats {sorted(unknown)}. Expected a subset of {FORMATS}")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "text" in formats:
        path = out_dir / f"{prefix}.txt"
        path.write_text(render_text(report), encoding="utf-8")
        written.append(path)
    if "csv" in formats:
        written.append(write_csv(report, out_dir / f"{prefix}.csv"))
    if "svg" in formats:
        if report.detection:
            written.append(write_pr_svg(report, out_dir / f"{prefix}_pr_curves.svg"))
        for key, c in report.classifiers.items():
            written.append(write_confusion_svg(c, out_dir / f"{prefix}_confusion_{key}.svg"))
    for p in written:
        logger.info(f"Wrote {p}")
    return written


def build_report(detection: Sequence[DetectionMetrics] = (),
                 confusions: Optional[Dict[str, ConfusionMatrix2]] = None,
                 config: Optional[Dict[str, Any]] = None) -> MetricsReport:
    return MetricsReport(
        detection={d.category.value: DetectionSummary.from_metrics(d) for d in detection},
        classifiers={k: ClassifierMetrics(k, cm) for k, cm in (confusions or {}).items()},
        config=dict(config or {}),
    )
