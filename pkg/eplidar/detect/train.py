import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from tqdm import tqdm

from eplidar.dataset import DatasetManifest, load_scene_frames
from eplidar.errors import CheckpointError, DivergenceError, EmptySplitError
from eplidar.geom import OrientedBox, PointCloud
from eplidar.nn import OneCycleConfig, load_checkpoint, make_optimizer, save_checkpoint, scheduled_step
from eplidar.utils import make_rng

from .loss import AnchorTargets, detector_loss, match_anchors
from .model import DetectorConfig, DetectorModel, prepare_frame, propose
from .postprocess import Detection, select_detections

logger = logging.getLogger(__name__)

_SHUFFLE_STREAM = 0xDE7EC7


@dataclass
class DetectorTrainConfig:
    epochs: int = 10
    max_lr: float = 0.01
    momentum: float = 0.9
    warmup_fraction: float = 0.3
    final_lr_fraction: float = 1e-4
    frame_stride: int = 1
    seed: int = 0


@dataclass(frozen=True)
class TrainingFrame:
    key: str
    cloud: PointCloud
    boxes: Tuple[OrientedBox, ...]


@dataclass
class TrainingHistory:
    step_losses: List[float] = field(default_factory=list)
    epoch_losses: List[float] = field(default_factory=list)
    checkpoints: List[Path] = field(default_factory=list)


def frames_from_manifest(manifest: DatasetManifest, split: str, stride: int = 1) -> List[TrainingFrame]:
    frames = []
    for entry in manifest.scenes_in(split):
        for frame_id, cloud, anns in load_scene_frames(manifest, entry.scene_id, range(0, entry.frame_count, stride)):
            frames.append(TrainingFrame(f"{entry.scene_id}:{frame_id:06d}", cloud, tuple(a.to_box() for a in anns)))
    return frames


def save_detector(path: Union[str, Path], model: DetectorModel) -> Path:
    return save_checkpoint(path, model, {"kind": "detector", "config": model.config.to_dict()})


def load_detector(path: Union[str, Path]) -> DetectorModel:
    state, meta = load_checkpoint(path)
    if not meta or meta.get("kind") != "detector":
        raise CheckpointError(f"{path} is not a detector checkpoint (missing or wrong config sidecar)")
    model = DetectorModel(DetectorConfig.from_dict(meta["config"]))
    model.load_state_dict(state)
    model.eval()
    return model


def train_detector(frames: Sequence[TrainingFrame], config: Optional[DetectorConfig] = None,
                   train_config: Optional[DetectorTrainConfig] = None,
                   checkpoint_dir: Optional[Union[str, Path]] = None) -> Tuple[DetectorModel, TrainingHistory]:
    """Train on one frame per step with Adam + OneCycle; deterministic for a given seed."""
    config = config or DetectorConfig()
    train_config = train_config or DetectorTrainConfig()
    frames = [f for f in frames if len(f.cloud)]
    if not frames:
        raise EmptySplitError("No non-empty training frames for the detector")
    torch.set_num_threads(1)

    model = DetectorModel(config)
    model.train()
    # keypoints and anchor targets depend only on the frame, so compute them once
    cache: Dict[str, Tuple[np.ndarray, AnchorTargets]] = {}
    for f in tqdm(frames, desc="Matching anchors", leave=False):
        inputs = prepare_frame(f.cloud, config)
        cache[f.key] = (inputs.keypoints, match_anchors(inputs.anchors, inputs.keypoints, f.boxes, config.anchors))
    n_pos = sum(t.num_positive for _, t in cache.values())
    logger.info(f"Detector training: {len(frames)} frames, {n_pos} positive anchors")

    schedule = OneCycleConfig(
        total_steps=train_config.epochs * len(frames), max_lr=train_config.max_lr,
        momentum=train_config.momentum, warmup_fraction=train_config.warmup_fraction,
        final_lr_fraction=train_config.final_lr_fraction,
    )
    opt = make_optimizer(model.parameters(), schedule)
    rng = make_rng(train_config.seed, _SHUFFLE_STREAM)
    history = TrainingHistory()

    for epoch in range(train_config.epochs):
        losses = []
        for i in tqdm(rng.permutation(len(frames)), desc=f"Epoch {epoch + 1}/{train_config.epochs}", leave=False):
            frame = frames[int(i)]
            keypoints, targets = cache[frame.key]
            cls_logits, reg = model(prepare_frame(frame.cloud, config, keypoints))
            loss = detector_loss(cls_logits, reg, targets)
            value = float(loss.total.detach())
            if not math.isfinite(value):
                raise DivergenceError(
                    f"Non-finite detector loss at epoch {epoch + 1}, step {opt.step}, frame {frame.key}"
                )
            opt.optimizer.zero_grad()
            loss.total.backward()
            scheduled_step(opt)
            losses.append(value)
            history.step_losses.append(value)
        history.epoch_losses.append(float(np.mean(losses)))
        logger.info(f"Epoch {epoch + 1}/{train_config.epochs} detector loss {history.epoch_losses[-1]:.4f}")
        if checkpoint_dir is not None:
            path = Path(checkpoint_dir) / f"detector_epoch{epoch + 1:03d}.epnn"
            history.checkpoints.append(save_detector(path, model))

    model.eval()
    if checkpoint_dir is not None:
        history.checkpoints.append(save_detector(Path(checkpoint_dir) / "detector.epnn", model))
    return model, history


def detect(model: DetectorModel, cloud: PointCloud) -> List[Detection]:
    """voxelize -> keypoints -> aggregate -> propose -> score threshold -> NMS."""
    if len(cloud) == 0:
        return []
    cfg = model.config
    was_training = model.training
    model.eval()
    with torch.no_grad():
        inputs = prepare_frame(cloud, cfg)
        cls_logits, reg = model(inputs)
    model.train(was_training)
    proposals = propose(cls_logits, reg, inputs.anchors, cfg.anchors)
    return select_detections(
        proposals, cfg.anchors.score_threshold, cfg.anchors.nms_iou_threshold, cfg.pre_nms_top_k
    )


def detect_frames(model: DetectorModel, clouds: Sequence[PointCloud], threads: int = 1) -> List[List[Detection]]:
    """Per-frame detections in input order; ``threads`` never changes the result."""
    torch.set_num_threads(1)
    model.eval()
    if threads <= 1:
        return [detect(model, c) for c in clouds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: detect(model, c), clouds))
