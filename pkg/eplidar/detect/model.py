import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from eplidar.errors import ShapeMismatch
from eplidar.geom import Category, PointCloud, VoxelGrid, voxelize
from eplidar.nn import DTYPE, SharedMLP, dense_layer

from .anchors import BOX_DIM, NUM_CLASSES, AnchorConfig, decode_boxes, make_anchors
from .keypoints import (
    DEFAULT_RADII,
    NUM_KEYPOINTS,
    Neighbourhoods,
    VoxelSetAbstraction,
    find_neighbourhoods,
    sample_keypoints,
    voxel_features,
)

logger = logging.getLogger(__name__)


@dataclass
class DetectorConfig:
    voxel_size: float = 0.2
    # x, y, z of the grid corner and the cell count along each axis
    grid_origin: Tuple[float, float, float] = (0.0, -16.0, -1.0)
    grid_dims: Tuple[int, int, int] = (160, 160, 20)
    num_keypoints: int = NUM_KEYPOINTS
    radii: Tuple[float, ...] = DEFAULT_RADII
    encoder_widths: Tuple[int, ...] = (16, 16)
    mlp_widths: Tuple[int, ...] = (32, 32)
    head_width: int = 64
    anchors: AnchorConfig = field(default_factory=AnchorConfig)
    pre_nms_top_k: int = 512
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        a = self.anchors
        d["anchors"] = {
            "extents": {c.value: list(v) for c, v in a.extents.items()},
            "heading_bins": a.heading_bins,
            "max_heading": a.max_heading,
            "ground_z": a.ground_z,
            "score_threshold": a.score_threshold,
            "nms_iou_threshold": a.nms_iou_threshold,
            "positive_iou": {c.value: v for c, v in a.positive_iou.items()},
            "negative_iou": a.negative_iou,
        }
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "DetectorConfig":
        d = dict(d)
        a = dict(d.pop("anchors", {}))
        if "extents" in a:
            a["extents"] = {Category.from_name(k): tuple(v) for k, v in a["extents"].items()}
        if "positive_iou" in a:
            a["positive_iou"] = {Category.from_name(k): float(v) for k, v in a["positive_iou"].items()}
        for key in ("grid_origin", "grid_dims", "radii", "encoder_widths", "mlp_widths"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(anchors=AnchorConfig(**a), **d)


@dataclass(frozen=True)
class FrameInputs:
    """Everything the network needs for one frame; fixed for a given cloud and config."""

    keypoints: np.ndarray
    anchors: np.ndarray  # (K, A, 7)
    grid: VoxelGrid
    neighbourhoods: Tuple[Neighbourhoods, ...]

    @property
    def num_keypoints(self) -> int:
        return int(self.keypoints.shape[0])


def prepare_frame(cloud: PointCloud, config: DetectorConfig, keypoints: Optional[np.ndarray] = None) -> FrameInputs:
    """Voxelize, pick keypoints (unless given) and gather neighbourhoods."""
    grid = voxelize(cloud, config.grid_origin, config.voxel_size, config.grid_dims)
    if keypoints is None:
        keypoints = sample_keypoints(cloud, config.num_keypoints) if len(cloud) else np.zeros((0, 3))
    return FrameInputs(
        keypoints=keypoints,
        anchors=make_anchors(keypoints, config.anchors),
        grid=grid,
        neighbourhoods=tuple(find_neighbourhoods(keypoints, grid, config.radii)),
    )


class DetectorModel(nn.Module):
    """Voxel encoder + keypoint set abstraction + per-anchor class/box heads."""

    def __init__(self, config: Optional[DetectorConfig] = None):
        super().__init__()
        self.config = config or DetectorConfig()
        gen = torch.Generator().manual_seed(self.config.seed)
        self.num_anchors = self.config.anchors.anchors_per_keypoint
        self.vsa = VoxelSetAbstraction(
            self.config.radii, self.config.encoder_widths, self.config.mlp_widths, generator=gen
        )
        self.trunk = SharedMLP((self.vsa.out_dim, self.config.head_width), generator=gen)
        self.cls_head = dense_layer(self.config.head_width, self.num_anchors * NUM_CLASSES, gen)
        self.reg_head = dense_layer(self.config.head_width, self.num_anchors * BOX_DIM, gen)
        with torch.no_grad():
            # start near "background everywhere, box = anchor"
            self.reg_head.weight.mul_(0.01)
            self.reg_head.bias.zero_()

    def features(self, inputs: FrameInputs) -> torch.Tensor:
        return self.vsa(
            torch.as_tensor(inputs.keypoints, dtype=DTYPE),
            torch.as_tensor(inputs.grid.centers, dtype=DTYPE),
            torch.as_tensor(voxel_features(inputs.grid), dtype=DTYPE),
            inputs.neighbourhoods,
        )

    def heads(self, features: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        if features.dim() != 2 or features.shape[1] != self.vsa.out_dim:
            raise ShapeMismatch(f"Expected (K, {self.vsa.out_dim}) features, got {tuple(features.shape)}")
        h = self.trunk(features)
        k = features.shape[0]
        cls_logits = self.cls_head(h).view(k, self.num_anchors, NUM_CLASSES)
        reg = self.reg_head(h).view(k, self.num_anchors, BOX_DIM)
        return cls_logits, reg

    def forward(self, inputs: FrameInputs) -> Tuple[torch.Tensor, torch.Tensor]:
        return self.heads(self.features(inputs))


@dataclass(frozen=True)
class Proposals:
    """Flattened per-(keypoint, anchor) outputs; row = keypoint * A + anchor."""

    scores: np.ndarray  # probability of the anchor's own category
    classes: np.ndarray  # class index of the anchor slot (1 pedestrian, 2 vehicle)
    boxes: np.ndarray  # (N, 7) decoded
    keypoint_index: np.ndarray


def propose(cls_logits: torch.Tensor, reg: torch.Tensor, anchors: np.ndarray, config: AnchorConfig) -> Proposals:
    k, a = anchors.shape[:2]
    if cls_logits.shape != (k, a, NUM_CLASSES) or reg.shape != (k, a, BOX_DIM):
        raise ShapeMismatch(
            f"Head outputs {tuple(cls_logits.shape)}, {tuple(reg.shape)} do not match anchors {anchors.shape}"
        )
    probs = F.softmax(cls_logits.detach(), dim=-1).numpy()
    slot_class = config.anchor_categories()
    scores = np.take_along_axis(probs, np.broadcast_to(slot_class, (k, a))[..., None], axis=-1)[..., 0]
    boxes = decode_boxes(reg.detach().numpy(), anchors, config.max_heading)
    return Proposals(
        scores=scores.reshape(-1),
        classes=np.broadcast_to(slot_class, (k, a)).reshape(-1).copy(),
        boxes=boxes.reshape(-1, BOX_DIM),
        keypoint_index=np.repeat(np.arange(k), a),
    )
