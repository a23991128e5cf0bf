"""PointNet classifier with input/feature transform nets and a feature propagation block."""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from eplidar.errors import ShapeMismatch
from eplidar.nn import DTYPE, SeededDropout, SharedMLP, dense_layer, max_pool_points

REGULARIZER_WEIGHT = 0.001


@dataclass
class PointNetConfig:
    num_points: int = 256
    point_mlp1: Tuple[int, ...] = (64, 64)
    point_mlp2: Tuple[int, ...] = (128, 1024)
    propagation: Tuple[int, ...] = (256, 128)
    head: Tuple[int, ...] = (512, 256)
    tnet_mlp: Tuple[int, ...] = (64, 128, 1024)
    tnet_fc: Tuple[int, ...] = (512, 256)
    dropout: float = 0.3
    num_classes: int = 2
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "PointNetConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


class TNet(nn.Module):
    """Predicts a k x k alignment matrix; starts out as the identity."""

    def __init__(self, k: int, mlp: Sequence[int], fc: Sequence[int], generator: Optional[torch.Generator] = None):
        super().__init__()
        self.k = k
        self.mlp = SharedMLP((k,) + tuple(mlp), generator=generator)
        self.fc = SharedMLP((self.mlp.out_dim,) + tuple(fc), generator=generator)
        self.out = dense_layer(self.fc.out_dim, k * k, generator)
        with torch.no_grad():
            self.out.weight.zero_()
            self.out.bias.copy_(torch.eye(k, dtype=DTYPE).flatten())

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        pooled, _ = max_pool_points(self.mlp(x))
        return self.out(self.fc(pooled)).view(-1, self.k, self.k)


class PointNet(nn.Module):
    """(B, N, 3) canonical points -> (B, num_classes) logits and the feature transform."""

    def __init__(self, config: Optional[PointNetConfig] = None):
        super().__init__()
        self.config = cfg = config or PointNetConfig()
        gen = torch.Generator().manual_seed(cfg.seed)
        self.input_tnet = TNet(3, cfg.tnet_mlp, cfg.tnet_fc, gen)
        self.mlp1 = SharedMLP((3,) + cfg.point_mlp1, generator=gen)
        local_dim = self.mlp1.out_dim
        self.feature_tnet = TNet(local_dim, cfg.tnet_mlp, cfg.tnet_fc, gen)
        self.mlp2 = SharedMLP((local_dim,) + cfg.point_mlp2, generator=gen)
        global_dim = self.mlp2.out_dim
        self.propagation = SharedMLP((global_dim + local_dim,) + cfg.propagation, generator=gen)
        head_in = global_dim + self.propagation.out_dim
        widths = (head_in,) + cfg.head
        self.hidden = nn.ModuleList(dense_layer(a, b, gen) for a, b in zip(widths[:-1], widths[1:]))
        self.dropout_generator = torch.Generator().manual_seed(cfg.seed + 1)
        self.dropouts = nn.ModuleList(SeededDropout(cfg.dropout, self.dropout_generator) for _ in cfg.head)
        self.classifier = dense_layer(widths[-1], cfg.num_classes, gen)

    def forward(self, points: torch.Tensor, training: Optional[bool] = None,
                generator: Optional[torch.Generator] = None) -> Tuple[torch.Tensor, torch.Tensor]:
        """`training` and `generator` override the module's dropout mode and mask stream for this call only."""
        if points.dim() != 3 or points.shape[-1] != 3:
            raise ShapeMismatch(f"PointNet expects (B, N, 3) points, got {tuple(points.shape)}")
        x = torch.bmm(points, self.input_tnet(points))
        local = self.mlp1(x)
        feat_t = self.feature_tnet(local)
        local = torch.bmm(local, feat_t)
        global_feat, _ = max_pool_points(self.mlp2(local))
        n = local.shape[1]
        # feature propagation: global context broadcast back to every point, then re-pooled
        spread = torch.cat([global_feat.unsqueeze(1).expand(-1, n, -1), local], dim=-1)
        propagated, _ = max_pool_points(self.propagation(spread))
        h = torch.cat([global_feat, propagated], dim=-1)
        for layer, drop in zip(self.hidden, self.dropouts):
            h = drop(F.relu(layer(h)), training, generator)
        return self.classifier(h), feat_t


def transform_regularizer(a: torch.Tensor) -> torch.Tensor:
    """||A Aᵀ - I||²_F for a square matrix, or the batch mean for (B, k, k)."""
    if a.dim() not in (2, 3) or a.shape[-1] != a.shape[-2]:
        raise ShapeMismatch(f"transform_regularizer needs square matrices, got {tuple(a.shape)}")
    eye = torch.eye(a.shape[-1], dtype=a.dtype)
    diff = a @ a.transpose(-1, -2) - eye
    per = (diff ** 2).sum(dim=(-1, -2))
    return per if a.dim() == 2 else per.mean()


def points_tensor(points: np.ndarray) -> torch.Tensor:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 2:
        pts = pts[None]
    return torch.as_tensor(pts[..., :3], dtype=DTYPE)


def pointnet_forward(model: PointNet, points: np.ndarray, training: bool = False,
                     generator: Optional[torch.Generator] = None) -> np.ndarray:
    """(Normal, Abnormal) probabilities for one canonical point set."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] != model.config.num_points:
        raise ShapeMismatch(f"Expected ({model.config.num_points}, 3+) points, got {pts.shape}")
    with torch.no_grad():
        logits, _ = model(points_tensor(pts), training=training, generator=generator)
    return F.softmax(logits[0], dim=-1).numpy()
