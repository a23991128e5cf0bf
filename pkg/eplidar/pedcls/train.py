import copy
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from tqdm import tqdm

from eplidar.activity import ActivityClass
from eplidar.errors import CheckpointError, DivergenceError, EmptySplitError, SingleClassError
from eplidar.nn import OneCycleConfig, cross_entropy, load_checkpoint, make_optimizer, save_checkpoint, scheduled_step
from eplidar.utils import make_rng

from .extract import PedestrianInstance
from .pointnet import REGULARIZER_WEIGHT, PointNet, PointNetConfig, points_tensor, transform_regularizer
from .voxel_mlp import VoxelMLP, VoxelMLPConfig

logger = logging.getLogger(__name__)

MODEL_KINDS = ("pointnet", "voxel_mlp")
_SHUFFLE_STREAM = 0xC1A55


@dataclass
class ClassifierTrainConfig:
    epochs: int = 100
    batch_size: int = 32
    max_lr: float = 0.01
    momentum: float = 0.9
    warmup_fraction: float = 0.3
    final_lr_fraction: float = 1e-4
    patience: int = 10
    regularizer_weight: float = REGULARIZER_WEIGHT
    # restrict training to these activities (None keeps all six)
    activities: Optional[Tuple[ActivityClass, ...]] = None
    seed: int = 0


@dataclass
class ClassifierHistory:
    train_loss: List[float] = field(default_factory=list)
    train_accuracy: List[float] = field(default_factory=list)
    val_accuracy: List[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False


def build_classifier(kind: str, config=None) -> nn.Module:
    if kind == "pointnet":
        return PointNet(config if isinstance(config, PointNetConfig) else None)
    if kind == "voxel_mlp":
        return VoxelMLP(config if isinstance(config, VoxelMLPConfig) else None)
    raise ValueError(f"Unknown classifier kind '{kind}'. Expected one of {MODEL_KINDS}")


def model_kind(model: nn.Module) -> str:
    return "pointnet" if isinstance(model, PointNet) else "voxel_mlp"


def _inputs(model: nn.Module, instances: Sequence[PedestrianInstance]) -> torch.Tensor:
    if isinstance(model, PointNet):
        return points_tensor(np.stack([i.points.data for i in instances]))
    return torch.stack([model.featurize(i.points.data, i.source_box.extents) for i in instances])


def _forward(model: nn.Module, x: torch.Tensor,
             training: Optional[bool] = None) -> Tuple[torch.Tensor, Optional[torch.Tensor]]:
    if isinstance(model, PointNet):
        return model(x, training=training)
    return model(x, training=training), None


def _labels(instances: Sequence[PedestrianInstance]) -> torch.Tensor:
    return torch.as_tensor([i.label.index for i in instances], dtype=torch.long)


def predict_instances(model: nn.Module, instances: Sequence[PedestrianInstance], batch_size: int = 256) -> np.ndarray:
    """(n, 2) Normal/Abnormal probabilities in inference mode."""
    if not instances:
        return np.zeros((0, 2))
    out = []
    with torch.no_grad():
        for start in range(0, len(instances), batch_size):
            logits, _ = _forward(model, _inputs(model, instances[start:start + batch_size]), training=False)
            out.append(F.softmax(logits, dim=-1).numpy())
    return np.concatenate(out)


def accuracy(model: nn.Module, instances: Sequence[PedestrianInstance]) -> float:
    if not instances:
        return float("nan")
    pred = predict_instances(model, instances).argmax(axis=1)
    return float(np.mean(pred == _labels(instances).numpy()))


def training_pool(instances: Sequence[PedestrianInstance],
                  activities: Optional[Sequence[ActivityClass]] = None) -> List[PedestrianInstance]:
    """Labeled instances, optionally restricted to some activities."""
    pool = [i for i in instances if i.labeled]
    if activities is not None:
        keep = set(activities)
        pool = [i for i in pool if i.activity in keep]
    return pool


def train_classifier(train: Sequence[PedestrianInstance], val: Sequence[PedestrianInstance] = (),
                     kind: str = "pointnet", model_config=None,
                     config: Optional[ClassifierTrainConfig] = None,
                     checkpoint_path: Optional[Union[str, Path]] = None) -> Tuple[nn.Module, ClassifierHistory]:
    """Mini-batch Adam + OneCycle with early stopping on validation accuracy.

    Unlabeled instances never reach a batch. The returned model holds the best validation
    weights (the last epoch's when there is no validation set).
    """
    config = config or ClassifierTrainConfig()
    train = training_pool(train, config.activities)
    val = training_pool(val, config.activities)
    if not train:
        raise EmptySplitError("No labeled training instances")
    classes = {i.label for i in train}
    if len(classes) < 2:
        raise SingleClassError(f"Training set holds only {[c.value for c in classes]} instances")
    torch.set_num_threads(1)

    model = build_classifier(kind, model_config)
    x_all = _inputs(model, train)
    y_all = _labels(train)
    n_batches = math.ceil(len(train) / config.batch_size)
    schedule = OneCycleConfig(
        total_steps=config.epochs * n_batches, max_lr=config.max_lr, momentum=config.momentum,
        warmup_fraction=config.warmup_fraction, final_lr_fraction=config.final_lr_fraction,
    )
    opt = make_optimizer(model.parameters(), schedule)
    rng = make_rng(config.seed, _SHUFFLE_STREAM)
    history = ClassifierHistory()
    best_acc, best_state, stale = -1.0, None, 0
    logger.info(f"Training {kind} on {len(train)} instances ({len(val)} validation), {n_batches} batches/epoch")

    for epoch in tqdm(range(config.epochs), desc=f"Training {kind}", leave=False):
        model.train()
        order = torch.as_tensor(rng.permutation(len(train)))
        losses, correct = [], 0
        for b in range(n_batches):
            idx = order[b * config.batch_size:(b + 1) * config.batch_size]
            logits, feat_t = _forward(model, x_all[idx])
            loss = cross_entropy(logits, y_all[idx])
            if feat_t is not None:
                loss = loss + config.regularizer_weight * transform_regularizer(feat_t)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise DivergenceError(f"Non-finite classifier loss at epoch {epoch + 1}, batch {b}")
            opt.optimizer.zero_grad()
            loss.backward()
            scheduled_step(opt)
            losses.append(value)
            correct += int((logits.detach().argmax(dim=1) == y_all[idx]).sum())
        history.train_loss.append(float(np.mean(losses)))
        history.train_accuracy.append(correct / len(train))

        if val:
            acc = accuracy(model, val)
            history.val_accuracy.append(acc)
            if acc > best_acc:
                best_acc, best_state, stale = acc, copy.deepcopy(model.state_dict()), 0
                history.best_epoch = epoch + 1
            else:
                stale += 1
            logger.debug(f"epoch {epoch + 1}: loss {history.train_loss[-1]:.4f} val acc {acc:.3f}")
            if stale >= config.patience:
                history.stopped_early = True
                logger.info(f"Early stop after epoch {epoch + 1}; best validation accuracy {best_acc:.3f}")
                break
        else:
            history.best_epoch = epoch + 1

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    if checkpoint_path is not None:
        save_classifier(checkpoint_path, model)
    return model, history


def save_classifier(path: Union[str, Path], model: nn.Module) -> Path:
    return save_checkpoint(path, model, {"kind": model_kind(model), "config": model.config.to_dict()})


def load_classifier(path: Union[str, Path]) -> nn.Module:
    state, meta = load_checkpoint(path)
    if not meta or meta.get("kind") not in MODEL_KINDS:
        raise CheckpointError(f"{path} is not a classifier checkpoint (missing or wrong config sidecar)")
    kind = meta["kind"]
    cfg = PointNetConfig.from_dict(meta["config"]) if kind == "pointnet" else VoxelMLPConfig.from_dict(meta["config"])
    model = build_classifier(kind, cfg)
    model.load_state_dict(state)
    model.eval()
    return model
