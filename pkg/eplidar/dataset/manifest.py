import configparser
import logging
import math
import os
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from eplidar.activity import ActivityClass
from eplidar.errors import AnnotationError, ManifestError, MissingArtifactError, SplitError
from eplidar.geom import CATEGORY_EXTENTS, Category, OrientedBox, PointCloud
from eplidar.utils import make_rng

from .annotations import Annotation, read_annotations, write_annotations
from .frames import read_frame, write_frame

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.ini"
MANIFEST_VERSION = 1
SPLITS = ("train", "val", "test")
EXTENT_SLACK = 1.10
FRAME_PATTERN = "{scene}/frames/{{frame:06d}}.eplf"
ANNOTATION_PATTERN = "{scene}/annotations.tsv"
_SCENE_PREFIX = "scene "
_SCENE_KEYS = {"frame_count", "frame_pattern", "annotations", "split", "seed", "duration"}
_SPLIT_STREAM = 0x5B117

PathLike = Union[str, os.PathLike]


@dataclass(frozen=True)
class SceneEntry:
    scene_id: str
    frame_count: int
    frame_pattern: str
    annotations: str
    split: Optional[str] = None
    seed: Optional[int] = None
    duration: Optional[float] = None

    def frame_path(self, root: Path, frame_id: int) -> Path:
        return Path(root) / self.frame_pattern.format(frame=frame_id)

    def annotation_path(self, root: Path) -> Path:
        return Path(root) / self.annotations


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    scenes: Tuple[SceneEntry, ...]
    name: str = "eplidar"

    def __post_init__(self):
        ids = [s.scene_id for s in self.scenes]
        dupes = sorted(k for k, v in Counter(ids).items() if v > 1)
        if dupes:
            raise ManifestError(f"Duplicate scene ids in manifest: {dupes}")
        object.__setattr__(self, "root", Path(self.root))
        object.__setattr__(self, "scenes", tuple(self.scenes))

    @property
    def path(self) -> Path:
        return self.root / MANIFEST_NAME

    def scene(self, scene_id: str) -> SceneEntry:
        for s in self.scenes:
            if s.scene_id == scene_id:
                return s
        raise ManifestError(f"Scene '{scene_id}' not in manifest {self.path}")

    def scenes_in(self, split: str) -> List[SceneEntry]:
        if split not in SPLITS:
            raise SplitError(f"Unknown split '{split}'. Expected one of {SPLITS}")
        return [s for s in self.scenes if s.split == split]

    def with_splits(self, assignment: Dict[str, str]) -> "DatasetManifest":
        return replace(self, scenes=tuple(replace(s, split=assignment.get(s.scene_id, s.split)) for s in self.scenes))


@dataclass
class ValidationReport:
    scenes: int = 0
    frames: int = 0
    annotations: int = 0
    per_category: Dict[str, int] = field(default_factory=dict)
    per_activity: Dict[str, int] = field(default_factory=dict)
    oversized: int = 0
    warnings: List[str] = field(default_factory=list)

    def summary(self) -> str:
        return (
            f"{self.scenes} scenes, {self.frames} frames, {self.annotations} boxes "
            f"{dict(sorted(self.per_category.items()))}, {len(self.warnings)} warnings"
        )


# ----------------------------- read / write -----------------------------

def write_manifest(manifest: DatasetManifest) -> Path:
    cfg = configparser.ConfigParser(interpolation=None)
    cfg["dataset"] = {
        "name": manifest.name,
        "version": str(MANIFEST_VERSION),
        "scene_count": str(len(manifest.scenes)),
    }
    for s in manifest.scenes:
        section = {
            "frame_count": str(s.frame_count),
            "frame_pattern": s.frame_pattern,
            "annotations": s.annotations,
        }
        if s.split is not None:
            section["split"] = s.split
        if s.seed is not None:
            section["seed"] = str(s.seed)
        if s.duration is not None:
            section["duration"] = repr(float(s.duration))
        cfg[_SCENE_PREFIX + s.scene_id] = section
    manifest.root.mkdir(parents=True, exist_ok=True)
    with open(manifest.path, "w", encoding="utf-8") as fh:
        cfg.write(fh)
    return manifest.path


def read_manifest(root: PathLike) -> DatasetManifest:
    root = Path(root)
    path = root / MANIFEST_NAME
    if not path.exists():
        raise MissingArtifactError(f"dataset manifest {path}", "simulate")
    cfg = configparser.ConfigParser(interpolation=None)
    try:
        cfg.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ManifestError(f"{path}: {exc}") from None
    if "dataset" not in cfg:
        raise ManifestError(f"{path}: missing [dataset] section")
    version = cfg["dataset"].getint("version", fallback=MANIFEST_VERSION)
    if version != MANIFEST_VERSION:
        raise ManifestError(f"{path}: manifest version {version}, expected {MANIFEST_VERSION}")

    scenes = []
    for section in cfg.sections():
        if section == "dataset":
            continue
        if not section.startswith(_SCENE_PREFIX):
            raise ManifestError(f"{path}: unexpected section [{section}]")
        sec = cfg[section]
        unknown = set(sec.keys()) - _SCENE_KEYS
        if unknown:
            raise ManifestError(f"{path}: unknown keys {sorted(unknown)} in [{section}]")
        try:
            split = sec.get("split")
            if split is not None and split not in SPLITS:
                raise ValueError(f"split '{split}' not in {SPLITS}")
            scenes.append(SceneEntry(
                scene_id=section[len(_SCENE_PREFIX):].strip(),
                frame_count=sec.getint("frame_count"),
                frame_pattern=sec["frame_pattern"],
                annotations=sec["annotations"],
                split=split,
                seed=sec.getint("seed") if "seed" in sec else None,
                duration=sec.getfloat("duration") if "duration" in sec else None,
            ))
        except (KeyError, ValueError, TypeError) as exc:
            raise ManifestError(f"{path}: bad [{section}]: {exc}") from None
    return DatasetManifest(root=root, scenes=tuple(scenes), name=cfg["dataset"].get("name", "eplidar"))


def write_scene(root: PathLike, scene_id: str,
                frames: Iterable[Tuple[PointCloud, Sequence[OrientedBox]]],
                seed: Optional[int] = None, duration: Optional[float] = None,
                object_ids: Optional[Iterable[Sequence[int]]] = None) -> SceneEntry:
    """Write one scene's frames and its annotation file; returns the manifest entry.

    ``object_ids`` gives, per frame, a stable id for each box; box order is used otherwise.
    """
    root = Path(root)
    entry = SceneEntry(
        scene_id=scene_id,
        frame_count=0,
        frame_pattern=FRAME_PATTERN.format(scene=scene_id),
        annotations=ANNOTATION_PATTERN.format(scene=scene_id),
        seed=seed,
        duration=duration,
    )
    ids_iter = iter(object_ids) if object_ids is not None else None
    records: List[Annotation] = []
    count = 0
    for frame_id, (cloud, boxes) in enumerate(frames):
        write_frame(entry.frame_path(root, frame_id), cloud)
        ids = next(ids_iter) if ids_iter is not None else range(len(boxes))
        records.extend(Annotation.from_box(frame_id, oid, box) for oid, box in zip(ids, boxes))
        count += 1
    write_annotations(entry.annotation_path(root), records)
    logger.info(f"Wrote {scene_id}: {count} frames, {len(records)} boxes")
    return replace(entry, frame_count=count)


def load_scene_frames(manifest: DatasetManifest, scene_id: str,
                      frames: Optional[Sequence[int]] = None) -> Iterator[Tuple[int, PointCloud, List[Annotation]]]:
    """Yield (frame_id, cloud, annotations) in frame order."""
    entry = manifest.scene(scene_id)
    by_frame: Dict[int, List[Annotation]] = {}
    for a in read_annotations(entry.annotation_path(manifest.root)):
        by_frame.setdefault(a.frame_id, []).append(a)
    indices = range(entry.frame_count) if frames is None else frames
    for frame_id in indices:
        if not 0 <= frame_id < entry.frame_count:
            raise ManifestError(f"{scene_id} has no frame {frame_id} (frame_count={entry.frame_count})")
        yield frame_id, read_frame(entry.frame_path(manifest.root, frame_id)), by_frame.get(frame_id, [])


# ----------------------------- splits -----------------------------

def _split_counts(n: int, ratios: Sequence[float]) -> List[int]:
    quotas = [r * n for r in ratios]
    counts = [int(math.floor(q)) for q in quotas]
    # largest remainder; ties go to the earlier split
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    for i, r in enumerate(ratios):
        if r > 0 and counts[i] == 0:
            donor = max(range(len(counts)), key=lambda j: (counts[j], -j))
            counts[donor] -= 1
            counts[i] += 1
    return counts


def split_dataset(manifest: DatasetManifest, ratios: Sequence[float] = (0.6, 0.2, 0.2),
                  seed: int = 0) -> DatasetManifest:
    """Assign whole scenes to train/val/test by a seeded shuffle."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != len(SPLITS):
        raise SplitError(f"Expected {len(SPLITS)} ratios (train, val, test), got {ratios}")
    if any(r < 0 or not math.isfinite(r) for r in ratios):
        raise SplitError(f"Split ratios must be non-negative, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"Split ratios must sum to 1, got {sum(ratios)}")
    n = len(manifest.scenes)
    active = sum(1 for r in ratios if r > 0)
    if n < active:
        raise SplitError(f"{n} scenes cannot fill {active} non-empty splits")

    ids = sorted(s.scene_id for s in manifest.scenes)
    order = make_rng(seed, _SPLIT_STREAM).permutation(n)
    counts = _split_counts(n, ratios)
    assignment: Dict[str, str] = {}
    start = 0
    for split, count in zip(SPLITS, counts):
        for k in order[start:start + count]:
            assignment[ids[int(k)]] = split
        start += count
    logger.info(f"Split {n} scenes into " + ", ".join(f"{s}={c}" for s, c in zip(SPLITS, counts)))
    return manifest.with_splits(assignment)


# ----------------------------- validation -----------------------------

def validate_dataset(manifest: DatasetManifest) -> ValidationReport:
    """Check files, frame references and activities; oversized boxes only warn."""
    report = ValidationReport(scenes=len(manifest.scenes))
    for entry in manifest.scenes:
        ann_path = entry.annotation_path(manifest.root)
        if not ann_path.exists():
            raise ManifestError(f"{entry.scene_id}: annotation file {ann_path} does not exist")
        for frame_id in range(entry.frame_count):
            fp = entry.frame_path(manifest.root, frame_id)
            if not fp.exists():
                raise ManifestError(f"{entry.scene_id}: frame file {fp} does not exist")
        report.frames += entry.frame_count

        for a in read_annotations(ann_path):
            if not 0 <= a.frame_id < entry.frame_count:
                raise ManifestError(
                    f"{entry.scene_id}: object {a.object_id} references frame {a.frame_id}, "
                    f"scene has {entry.frame_count}"
                )
            if a.category is Category.PEDESTRIAN:
                try:
                    activity = ActivityClass.from_name(a.activity)
                except ValueError:
                    raise AnnotationError(
                        f"frame {a.frame_id} object {a.object_id}: activity {a.activity!r} is not one of "
                        f"{[m.value for m in ActivityClass]}", path=str(ann_path),
                    ) from None
                report.per_activity[activity.value] = report.per_activity.get(activity.value, 0) + 1
            report.annotations += 1
            report.per_category[a.category_name] = report.per_category.get(a.category_name, 0) + 1
            limit = np.asarray(CATEGORY_EXTENTS[a.category]) * EXTENT_SLACK
            if np.any(np.array([a.w, a.h, a.l]) > limit):
                report.oversized += 1
                msg = (f"{entry.scene_id} frame {a.frame_id} object {a.object_id}: extents "
                       f"({a.w:.2f}, {a.h:.2f}, {a.l:.2f}) exceed {a.category_name} maxima + 10%")
                report.warnings.append(msg)
                logger.warning(msg)
    logger.info(f"Validated dataset: {report.summary()}")
    return report


def open_dataset(root: PathLike, validate: bool = True) -> DatasetManifest:
    manifest = read_manifest(root)
    if validate:
        validate_dataset(manifest)
    return manifest
