import math
from typing import Sequence, Tuple

import numpy as np

from .types import OrientedBox, PointCloud


def rotation_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def transform_cloud(cloud: PointCloud, translation: Sequence[float], z_rotation: float) -> PointCloud:
    """Rotate about Z by ``z_rotation`` then translate; intensity and order are kept."""
    t = np.asarray(translation, dtype=np.float64).reshape(3)
    out = np.array(cloud.data, copy=True)
    out[:, :3] = cloud.xyz @ rotation_z(z_rotation).T + t
    return PointCloud(out, validate=False)


def invert_rigid(translation: Sequence[float], z_rotation: float) -> Tuple[np.ndarray, float]:
    """Parameters of the inverse of ``transform_cloud(., translation, z_rotation)``."""
    t = np.asarray(translation, dtype=np.float64).reshape(3)
    return -(rotation_z(-z_rotation) @ t), -z_rotation


def to_box_frame(cloud: PointCloud, box: OrientedBox) -> PointCloud:
    """Translate by -center, then rotate by -heading."""
    rot = -box.heading
    return transform_cloud(cloud, -(rotation_z(rot) @ box.center), rot)
