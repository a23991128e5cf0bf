from eplidar.activity import ACTIVITY_TO_BINARY, ActivityClass, BinaryLabel

from .extract import (
    CANONICAL_POINTS,
    MATCH_IOU,
    ExtractionStats,
    LabeledMatch,
    PedestrianInstance,
    crop_and_normalize,
    extract_frame_instances,
    match_and_label,
)
from .instances import read_instances, write_instances
from .pointnet import PointNet, PointNetConfig, TNet, pointnet_forward, transform_regularizer
from .voxel_mlp import VoxelMLP, VoxelMLPConfig, occupancy_grid, voxel_mlp_forward
from .train import (
    ClassifierHistory,
    ClassifierTrainConfig,
    accuracy,
    build_classifier,
    load_classifier,
    predict_instances,
    save_classifier,
    train_classifier,
    training_pool,
)

__all__ = [
    "ACTIVITY_TO_BINARY",
    "ActivityClass",
    "BinaryLabel",
    "CANONICAL_POINTS",
    "MATCH_IOU",
    "ExtractionStats",
    "LabeledMatch",
    "PedestrianInstance",
    "crop_and_normalize",
    "extract_frame_instances",
    "match_and_label",
    "read_instances",
    "write_instances",
    "PointNet",
    "PointNetConfig",
    "TNet",
    "pointnet_forward",
    "transform_regularizer",
    "VoxelMLP",
    "VoxelMLPConfig",
    "occupancy_grid",
    "voxel_mlp_forward",
    "ClassifierHistory",
    "ClassifierTrainConfig",
    "accuracy",
    "build_classifier",
    "load_classifier",
    "predict_instances",
    "save_classifier",
    "train_classifier",
    "training_pool",
]
