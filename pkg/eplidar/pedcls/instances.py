"""Instance dumps: all canonical point sets in one EPLF file plus a tab-separated sidecar."""

import logging
import os
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

from eplidar.activity import ActivityClass, BinaryLabel
from eplidar.dataset import read_frame, write_frame
from eplidar.errors import AnnotationError
from eplidar.geom import Category, OrientedBox, PointCloud

from .extract import PedestrianInstance

logger = logging.getLogger(__name__)

POINTS_FILE = "instances.eplf"
SIDECAR_FILE = "instances.tsv"
SIDECAR_COLUMNS = [
    "instance_id", "label", "match_iou", "scene_id", "frame_id", "split", "activity",
    "cx", "cy", "cz", "w", "h", "l", "heading", "num_points",
]
_MISSING = "-"

PathLike = Union[str, os.PathLike]


def write_instances(directory: PathLike, instances: Sequence[PedestrianInstance]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_frame(directory / POINTS_FILE, PointCloud.concat(*(i.points for i in instances)))
    rows = []
    for inst in instances:
        b = inst.source_box
        rows.append({
            "instance_id": inst.instance_id,
            "label": inst.label.value if inst.label is not None else _MISSING,
            "match_iou": repr(float(inst.match_iou)),
            "scene_id": inst.scene_id,
            "frame_id": inst.frame_id,
            "split": inst.split or _MISSING,
            "activity": inst.activity.value if inst.activity is not None else _MISSING,
            **{k: repr(float(v)) for k, v in zip(("cx", "cy", "cz", "w", "h", "l", "heading"), b.as_tuple())},
            "num_points": len(inst.points),
        })
    pd.DataFrame(rows, columns=SIDECAR_COLUMNS).to_csv(directory / SIDECAR_FILE, sep="\t", index=False)
    logger.info(f"Wrote {len(instances)} instances to {directory}")
    return directory


def read_instances(directory: PathLike) -> List[PedestrianInstance]:
    directory = Path(directory)
    sidecar = directory / SIDECAR_FILE
    table = pd.read_csv(sidecar, sep="\t", dtype=str, keep_default_na=False)
    missing = set(SIDECAR_COLUMNS) - set(table.columns)
    if missing:
        raise AnnotationError(f"missing columns {sorted(missing)}", path=str(sidecar))
    points = read_frame(directory / POINTS_FILE).data
    counts = table["num_points"].astype(int).to_numpy()
    if counts.sum() != points.shape[0]:
        raise AnnotationError(
            f"sidecar lists {counts.sum()} points but {POINTS_FILE} holds {points.shape[0]}", path=str(sidecar)
        )
    offsets = np.concatenate([[0], np.cumsum(counts)])
    out = []
    for row_no, row in enumerate(table.itertuples(index=False), start=2):
        r = row._asdict()
        try:
            box = OrientedBox(*(float(r[k]) for k in ("cx", "cy", "cz", "w", "h", "l", "heading")),
                              category=Category.PEDESTRIAN)
            start, stop = offsets[row_no - 2], offsets[row_no - 1]
            out.append(PedestrianInstance(
                instance_id=r["instance_id"],
                points=PointCloud(points[start:stop], validate=False),
                source_box=box,
                label=None if r["label"] == _MISSING else BinaryLabel(r["label"]),
                match_iou=float(r["match_iou"]),
                activity=None if r["activity"] == _MISSING else ActivityClass.from_name(r["activity"]),
                scene_id=r["scene_id"],
                frame_id=int(r["frame_id"]),
                split=None if r["split"] == _MISSING else r["split"],
            ))
        except ValueError as exc:
            raise AnnotationError(str(exc), line_number=row_no, path=str(sidecar)) from None
    return out
