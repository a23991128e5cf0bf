"""Tab-separated box annotations and detection dumps."""

import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

from eplidar.activity import ActivityClass
from eplidar.errors import AnnotationError
from eplidar.geom import Category, OrientedBox

logger = logging.getLogger(__name__)

ANNOTATION_COLUMNS = (
    "frame_id", "object_id", "cx", "cy", "cz", "w", "h", "l", "heading", "category_name", "activity",
)
DETECTION_COLUMNS = ANNOTATION_COLUMNS + ("score",)
NO_ACTIVITY = "-"

PathLike = Union[str, os.PathLike]


@dataclass(frozen=True)
class Annotation:
    frame_id: int
    object_id: int
    cx: float
    cy: float
    cz: float
    w: float
    h: float
    l: float
    heading: float
    category_name: str
    activity: Optional[str] = None

    def __post_init__(self):
        if self.category_name not in (c.value for c in Category):
            raise AnnotationError(f"unknown category {self.category_name!r}")
        is_ped = self.category_name == Category.PEDESTRIAN.value
        if is_ped and self.activity is None:
            raise AnnotationError(f"Pedestrian object {self.object_id} has no activity")
        if not is_ped and self.activity is not None:
            raise AnnotationError(f"{self.category_name} object {self.object_id} carries activity '{self.activity}'")

    @property
    def category(self) -> Category:
        return Category(self.category_name)

    @property
    def activity_class(self) -> Optional[ActivityClass]:
        return ActivityClass.from_name(self.activity) if self.activity is not None else None

    def to_box(self) -> OrientedBox:
        return OrientedBox(self.cx, self.cy, self.cz, self.w, self.h, self.l, self.heading,
                           self.category, self.activity_class)

    @classmethod
    def from_box(cls, frame_id: int, object_id: int, box: OrientedBox) -> "Annotation":
        return cls(
            frame_id=int(frame_id), object_id=int(object_id),
            cx=float(box.cx), cy=float(box.cy), cz=float(box.cz),
            w=float(box.w), h=float(box.h), l=float(box.l), heading=float(box.heading),
            category_name=box.category.value,
            activity=box.activity.value if box.activity is not None else None,
        )


@dataclass(frozen=True)
class DetectionRecord:
    """One detector output as dumped to disk; detections carry no activity."""

    frame_id: int
    object_id: int
    box: OrientedBox
    score: float


def _format_row(frame_id, object_id, values, category_name, activity) -> str:
    # repr() gives the shortest string that parses back to the same float
    fields = [str(int(frame_id)), str(int(object_id)), *(repr(float(v)) for v in values),
              category_name, activity if activity is not None else NO_ACTIVITY]
    return "\t".join(fields)


def _parse_row(fields: List[str], n_columns: int, line_no: int, path: str) -> Tuple:
    def err(msg):
        return AnnotationError(msg, line_number=line_no, path=path)

    if len(fields) != n_columns:
        raise err(f"expected {n_columns} tab-separated fields, found {len(fields)}")
    try:
        frame_id, object_id = int(fields[0]), int(fields[1])
    except ValueError:
        raise err(f"frame_id/object_id must be integers, got {fields[0]!r}, {fields[1]!r}") from None
    values = []
    for name, raw in zip(ANNOTATION_COLUMNS[2:9], fields[2:9]):
        try:
            v = float(raw)
        except ValueError:
            raise err(f"field {name} is not a number: {raw!r}") from None
        if not math.isfinite(v):
            raise err(f"field {name} is not finite: {raw!r}")
        values.append(v)
    category = fields[9]
    if category not in (c.value for c in Category):
        raise err(f"unknown category {category!r}")
    activity = None if fields[10] == NO_ACTIVITY else fields[10]
    return frame_id, object_id, values, category, activity


def _header(columns) -> str:
    return "# " + "\t".join(columns) + "\n"


def _data_lines(path: Path):
    # parsed line by line so errors carry the physical file line, blank and comment lines included
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield line_no, line.split("\t")


def write_annotations(path: PathLike, records: Iterable[Annotation]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [_header(ANNOTATION_COLUMNS)]
    for r in records:
        values = (r.cx, r.cy, r.cz, r.w, r.h, r.l, r.heading)
        lines.append(_format_row(r.frame_id, r.object_id, values, r.category_name, r.activity) + "\n")
    path.write_text("".join(lines), encoding="utf-8")


def read_annotations(path: PathLike) -> List[Annotation]:
    path = Path(path)
    out = []
    for n, fields in _data_lines(path):
        frame_id, object_id, values, category, activity = _parse_row(fields, len(ANNOTATION_COLUMNS), n, str(path))
        try:
            out.append(Annotation(frame_id, object_id, *values, category_name=category, activity=activity))
        except AnnotationError as exc:
            raise AnnotationError(str(exc), line_number=n, path=str(path)) from None
    return out


def write_detections(path: PathLike, records: Iterable[DetectionRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [_header(DETECTION_COLUMNS)]
    for r in records:
        row = _format_row(r.frame_id, r.object_id, r.box.as_tuple(), r.box.category.value, None)
        lines.append(f"{row}\t{float(r.score)!r}\n")
    path.write_text("".join(lines), encoding="utf-8")


def read_detections(path: PathLike) -> List[DetectionRecord]:
    path = Path(path)
    out = []
    for n, fields in _data_lines(path):
        if len(fields) != len(DETECTION_COLUMNS):
            raise AnnotationError(f"expected {len(DETECTION_COLUMNS)} tab-separated fields, found {len(fields)}",
                                  line_number=n, path=str(path))
        frame_id, object_id, values, category, _ = _parse_row(fields[:-1], len(ANNOTATION_COLUMNS), n, str(path))
        try:
            score = float(fields[-1])
        except ValueError:
            raise AnnotationError(f"score is not a number: {fields[-1]!r}", line_number=n, path=str(path)) from None
        if not 0.0 <= score <= 1.0:
            raise AnnotationError(f"score {score} outside [0, 1]", line_number=n, path=str(path))
        box = OrientedBox(*values, category=Category(category))
        out.append(DetectionRecord(frame_id, object_id, box, score))
    return out
