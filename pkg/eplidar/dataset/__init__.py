from .frames import FRAME_MAGIC, FRAME_VERSION, HEADER_SIZE, decode_frame, encode_frame, read_frame, write_frame
from .annotations import (
    ANNOTATION_COLUMNS,
    Annotation,
    DetectionRecord,
    read_annotations,
    read_detections,
    write_annotations,
    write_detections,
)
from .manifest import (
    SPLITS,
    DatasetManifest,
    SceneEntry,
    ValidationReport,
    load_scene_frames,
    open_dataset,
    read_manifest,
    split_dataset,
    validate_dataset,
    write_manifest,
    write_scene,
)

__all__ = [
    "FRAME_MAGIC",
    "FRAME_VERSION",
    "HEADER_SIZE",
    "decode_frame",
    "encode_frame",
    "read_frame",
    "write_frame",
    "ANNOTATION_COLUMNS",
    "Annotation",
    "DetectionRecord",
    "read_annotations",
    "read_detections",
    "write_annotations",
    "write_detections",
    "SPLITS",
    "DatasetManifest",
    "SceneEntry",
    "ValidationReport",
    "load_scene_frames",
    "open_dataset",
    "read_manifest",
    "split_dataset",
    "validate_dataset",
    "write_manifest",
    "write_scene",
]
