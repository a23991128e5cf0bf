"""Voxel-grid MLP baseline."""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from eplidar.nn import DTYPE, SeededDropout, dense_layer


@dataclass
class VoxelMLPConfig:
    resolution: int = 8
    # cube side in metres for point sets without a known source box
    extent: float = 2.2
    hidden: Tuple[int, ...] = (512, 128)
    dropout: float = 0.3
    num_classes: int = 2
    seed: int = 0

    @property
    def input_dim(self) -> int:
        return 2 * self.resolution ** 3

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "VoxelMLPConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def occupancy_grid(points: np.ndarray, resolution: int = 8,
                   extents: Union[float, Sequence[float], np.ndarray] = 2.2) -> np.ndarray:
    """Flattened [occupancy, mean intensity] over a box centred on the canonical origin.

    `extents` is the box size along x, y and z (a scalar gives a cube); pass the instance's
    source box extents so the grid spans exactly that box. Points outside fall into the
    nearest boundary cell and points on a face land in the last cell. Output does not depend
    on point order.
    """
    size = np.broadcast_to(np.asarray(extents, dtype=np.float64), (3,))
    if np.any(size <= 0):
        raise ValueError(f"occupancy_grid extents must be positive, got {size.tolist()}")
    pts = np.asarray(points, dtype=np.float64)
    # lexicographic order makes the intensity sums order-free
    pts = pts[np.lexsort(pts.T[::-1])]
    cell = np.floor((pts[:, :3] + size / 2.0) / (size / resolution)).astype(np.int64)
    cell = np.clip(cell, 0, resolution - 1)
    flat = np.ravel_multi_index(cell.T, (resolution,) * 3)
    count = np.bincount(flat, minlength=resolution ** 3).astype(np.float64)
    inten = np.bincount(flat, weights=pts[:, 3], minlength=resolution ** 3)
    mean = np.divide(inten, count, out=np.zeros_like(inten), where=count > 0)
    return np.concatenate([(count > 0).astype(np.float64), mean])


class VoxelMLP(nn.Module):
    def __init__(self, config: Optional[VoxelMLPConfig] = None):
        super().__init__()
        self.config = cfg = config or VoxelMLPConfig()
        gen = torch.Generator().manual_seed(cfg.seed)
        widths = (cfg.input_dim,) + tuple(cfg.hidden)
        self.hidden = nn.ModuleList(dense_layer(a, b, gen) for a, b in zip(widths[:-1], widths[1:]))
        self.dropout_generator = torch.Generator().manual_seed(cfg.seed + 1)
        self.dropouts = nn.ModuleList(SeededDropout(cfg.dropout, self.dropout_generator) for _ in cfg.hidden)
        self.classifier = dense_layer(widths[-1], cfg.num_classes, gen)

    def forward(self, grids: torch.Tensor, training: Optional[bool] = None,
                generator: Optional[torch.Generator] = None) -> torch.Tensor:
        h = grids
        for layer, drop in zip(self.hidden, self.dropouts):
            h = drop(F.relu(layer(h)), training, generator)
        return self.classifier(h)

    def featurize(self, points: np.ndarray, extents: Optional[Sequence[float]] = None) -> torch.Tensor:
        size = self.config.extent if extents is None else extents
        return torch.as_tensor(occupancy_grid(points, self.config.resolution, size), dtype=DTYPE)


def voxel_mlp_forward(model: VoxelMLP, points: np.ndarray, extents: Optional[Sequence[float]] = None) -> np.ndarray:
    with torch.no_grad():
        logits = model(model.featurize(points, extents).unsqueeze(0), training=False)
    return F.softmax(logits[0], dim=-1).numpy()
