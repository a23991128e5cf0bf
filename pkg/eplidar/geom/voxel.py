from typing import Sequence

import numpy as np

from .types import PointCloud, VoxelGrid


def voxelize(cloud: PointCloud, origin: Sequence[float], voxel_size: float, dims: Sequence[int]) -> VoxelGrid:
    """Bin points into cells floor((p - origin) / voxel_size).

    Cells are half-open except the last one per axis, which also takes points on the far face.
    Out-of-bounds points are dropped and tallied.
    """
    if voxel_size <= 0:
        raise ValueError(f"voxel_size must be positive, got {voxel_size}")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise ValueError(f"dims must be three positive integers, got {dims}")
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    dims_arr = np.asarray(dims, dtype=np.int64)

    if len(cloud) == 0:
        return VoxelGrid(
            origin=origin, voxel_size=float(voxel_size), dims=dims,
            indices=np.zeros((0, 3), dtype=np.int64), counts=np.zeros((0,), dtype=np.int64),
            mean_xyz=np.zeros((0, 3)), mean_intensity=np.zeros((0,)), dropped=0,
        )

    rel = (cloud.xyz - origin) / voxel_size
    idx = np.floor(rel).astype(np.int64)
    on_far_face = rel == dims_arr
    idx[on_far_face] -= 1
    inside = np.all((rel >= 0) & (idx >= 0) & (idx < dims_arr), axis=1)
    dropped = int(np.count_nonzero(~inside))

    idx = idx[inside]
    data = cloud.data[inside]
    linear = np.ravel_multi_index(idx.T, dims)
    cell_ids, inverse, counts = np.unique(linear, return_inverse=True, return_counts=True)
    sums = np.zeros((cell_ids.shape[0], 4))
    np.add.at(sums, inverse, data)
    means = sums / counts[:, None]

    indices = np.stack(np.unravel_index(cell_ids, dims), axis=1).astype(np.int64)
    # keep means inside their cell against summation round-off
    lo = origin + indices * voxel_size
    mean_xyz = np.clip(means[:, :3], lo, lo + voxel_size)
    return VoxelGrid(
        origin=origin, voxel_size=float(voxel_size), dims=dims,
        indices=indices, counts=counts.astype(np.int64),
        mean_xyz=mean_xyz, mean_intensity=means[:, 3], dropped=dropped,
    )
