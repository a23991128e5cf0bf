import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch
import torch.nn as nn
from scipy.spatial import cKDTree

from eplidar.errors import SamplingError
from eplidar.geom import PointCloud, VoxelGrid, farthest_point_sampling
from eplidar.nn import DTYPE, SharedMLP

logger = logging.getLogger(__name__)

NUM_KEYPOINTS = 4096
DEFAULT_RADII = (0.8, 1.6)
VOXEL_FEATURES = 5  # offset of the mean from the cell center (3), mean intensity, log1p(count)


def sample_keypoints(cloud: PointCloud, k: int = NUM_KEYPOINTS) -> np.ndarray:
    """(min(k, n), 3) keypoint positions picked by FPS from index 0."""
    n = len(cloud)
    if n == 0:
        raise SamplingError("Cannot sample keypoints from an empty cloud")
    if n < k:
        logger.warning(f"Cloud has {n} points, fewer than {k} keypoints; using all of them")
        k = n
    return cloud.xyz[farthest_point_sampling(cloud, k, start=0)]


@dataclass(frozen=True)
class Neighbourhoods:
    """Keypoint/voxel pairs for one radius, ordered by keypoint then voxel index."""

    radius: float
    keypoint_index: np.ndarray
    voxel_index: np.ndarray


def voxel_features(grid: VoxelGrid) -> np.ndarray:
    if len(grid) == 0:
        return np.zeros((0, VOXEL_FEATURES))
    offset = (grid.mean_xyz - grid.centers) / grid.voxel_size
    return np.hstack([offset, grid.mean_intensity[:, None], np.log1p(grid.counts)[:, None].astype(np.float64)])


def find_neighbourhoods(keypoints: np.ndarray, grid: VoxelGrid,
                        radii: Sequence[float] = DEFAULT_RADII) -> List[Neighbourhoods]:
    out = []
    centers = grid.centers
    tree = cKDTree(centers) if len(grid) else None
    for r in radii:
        if tree is None or len(keypoints) == 0:
            out.append(Neighbourhoods(r, np.zeros((0,), np.int64), np.zeros((0,), np.int64)))
            continue
        hits = tree.query_ball_point(keypoints, r, return_sorted=True)
        lengths = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
        kp_idx = np.repeat(np.arange(len(hits), dtype=np.int64), lengths)
        vox_idx = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits]) if lengths.sum() else np.zeros((0,), np.int64)
        out.append(Neighbourhoods(r, kp_idx, vox_idx))
    return out


class VoxelSetAbstraction(nn.Module):
    """Per-radius shared MLP over neighbouring voxels, max-pooled per keypoint.

    Pair features are (voxel center - keypoint) / radius, mean intensity, log1p(count)
    and the voxel encoder's output. Keypoints with no voxel in range get zeros.
    """

    def __init__(self, radii: Sequence[float] = DEFAULT_RADII, encoder_widths: Sequence[int] = (16, 16),
                 mlp_widths: Sequence[int] = (32, 32), generator: Optional[torch.Generator] = None):
        super().__init__()
        self.radii = tuple(float(r) for r in radii)
        self.encoder = SharedMLP((VOXEL_FEATURES,) + tuple(encoder_widths), generator=generator)
        pair_dim = 5 + self.encoder.out_dim
        self.mlps = nn.ModuleList(
            SharedMLP((pair_dim,) + tuple(mlp_widths), generator=generator) for _ in self.radii
        )

    @property
    def out_dim(self) -> int:
        return sum(m.out_dim for m in self.mlps)

    def forward(self, keypoints: torch.Tensor, centers: torch.Tensor, raw: torch.Tensor,
                neighbourhoods: Sequence[Neighbourhoods]) -> torch.Tensor:
        encoded = self.encoder(raw)
        outputs = []
        for mlp, nb in zip(self.mlps, neighbourhoods):
            kp = torch.as_tensor(nb.keypoint_index)
            vx = torch.as_tensor(nb.voxel_index)
            rel = (centers[vx] - keypoints[kp]) / nb.radius
            pair = torch.cat([rel, raw[vx, 3:5], encoded[vx]], dim=1)
            h = mlp(pair)
            # ReLU outputs are >= 0, so a zero start equals the max over the neighbourhood
            pooled = torch.zeros(keypoints.shape[0], mlp.out_dim, dtype=DTYPE)
            index = kp.unsqueeze(1).expand(-1, mlp.out_dim)
            outputs.append(pooled.scatter_reduce(0, index, h, reduce="amax", include_self=True))
        return torch.cat(outputs, dim=1)


def aggregate_keypoint_features(module: VoxelSetAbstraction, keypoints: np.ndarray,
                                grid: VoxelGrid) -> torch.Tensor:
    nbs = find_neighbourhoods(keypoints, grid, module.radii)
    return module(
        torch.as_tensor(keypoints, dtype=DTYPE),
        torch.as_tensor(grid.centers, dtype=DTYPE),
        torch.as_tensor(voxel_features(grid), dtype=DTYPE),
        nbs,
    )
