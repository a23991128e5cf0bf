import logging

import numpy as np

from eplidar.errors import SamplingError

from .types import PointCloud

logger = logging.getLogger(__name__)


def farthest_point_sampling(cloud: PointCloud, k: int, start: int = 0) -> np.ndarray:
    """Greedy farthest point sampling over x, y, z.

    The first index is ``start``; each next index maximises the minimum distance to the points
    already chosen, ties going to the lowest index. The first j indices of FPS(k) are FPS(j).
    """
    n = len(cloud)
    if n == 0:
        raise SamplingError("Cannot sample from an empty cloud")
    if not 1 <= k <= n:
        raise SamplingError(f"FPS needs 1 <= k <= {n}, got k={k}")
    if not 0 <= start < n:
        raise SamplingError(f"FPS start index {start} outside [0, {n})")

    xyz = cloud.xyz
    selected = np.empty((k,), dtype=np.int64)
    selected[0] = start
    min_d2 = np.full((n,), np.inf)
    current = start
    for i in range(1, k):
        d2 = np.sum((xyz - xyz[current]) ** 2, axis=1)
        np.minimum(min_d2, d2, out=min_d2)
        min_d2[current] = -1.0  # never pick twice, even among duplicate points
        current = int(np.argmax(min_d2))
        selected[i] = current
    return selected
