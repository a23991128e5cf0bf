from .anchors import (
    MAX_HEADING,
    AnchorConfig,
    decode_boxes,
    encode_boxes,
    make_anchors,
)
from .keypoints import VoxelSetAbstraction, aggregate_keypoint_features, find_neighbourhoods, sample_keypoints
from .model import DetectorConfig, DetectorModel, FrameInputs, Proposals, prepare_frame, propose
from .postprocess import Detection, nms_3d, select_detections
from .loss import AnchorTargets, DetectorLoss, detector_loss, match_anchors
from .train import (
    DetectorTrainConfig,
    TrainingFrame,
    TrainingHistory,
    detect,
    detect_frames,
    frames_from_manifest,
    load_detector,
    save_detector,
    train_detector,
)

__all__ = [
    "MAX_HEADING",
    "AnchorConfig",
    "decode_boxes",
    "encode_boxes",
    "make_anchors",
    "VoxelSetAbstraction",
    "aggregate_keypoint_features",
    "find_neighbourhoods",
    "sample_keypoints",
    "DetectorConfig",
    "DetectorModel",
    "FrameInputs",
    "Proposals",
    "prepare_frame",
    "propose",
    "Detection",
    "nms_3d",
    "select_detections",
    "AnchorTargets",
    "DetectorLoss",
    "detector_loss",
    "match_anchors",
    "DetectorTrainConfig",
    "TrainingFrame",
    "TrainingHistory",
    "detect",
    "detect_frames",
    "frames_from_manifest",
    "load_detector",
    "save_detector",
    "train_detector",
]
