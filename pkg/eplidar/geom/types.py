import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from eplidar.activity import ActivityClass

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [0, 2π)."""
    wrapped = math.fmod(float(theta), TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    if wrapped >= TWO_PI:
        wrapped = 0.0
    return wrapped


class Category(str, Enum):
    PEDESTRIAN = "Pedestrian"
    VEHICLE = "Vehicle"

    @classmethod
    def from_name(cls, name: str) -> "Category":
        for member in cls:
            if member.value.lower() == str(name).strip().lower():
                return member
        raise ValueError(f"Unknown category '{name}'. Expected one of {[m.value for m in cls]}")


# Nominal box sizes (w, h, l); detector anchors and the dataset sanity limits.
CATEGORY_EXTENTS = {
    Category.PEDESTRIAN: (1.7, 1.7, 2.0),
    Category.VEHICLE: (3.0, 3.0, 3.5),
}


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    z: float
    intensity: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"Point coordinates must be finite, got {(self.x, self.y, self.z)}")
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError(f"Point intensity must lie in [0, 1], got {self.intensity}")

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


class PointCloud:
    """(n, 4) float64 array of x, y, z, intensity samples."""

    __slots__ = ("_data",)

    def __init__(self, data=None, validate: bool = True):
        if data is None:
            arr = np.zeros((0, 4), dtype=np.float64)
        else:
            arr = np.array(data, dtype=np.float64)
            if arr.ndim == 1 and arr.size == 0:
                arr = arr.reshape(0, 4)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError(f"PointCloud expects shape (n, 4), got {arr.shape}")
        if validate and arr.shape[0]:
            if not np.all(np.isfinite(arr[:, :3])):
                raise ValueError("PointCloud coordinates must be finite")
            inten = arr[:, 3]
            if np.any(inten < 0.0) or np.any(inten > 1.0):
                raise ValueError("PointCloud intensities must lie in [0, 1]")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def from_xyz(cls, xyz, intensity=None) -> "PointCloud":
        xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        if intensity is None:
            inten = np.zeros((xyz.shape[0], 1))
        else:
            inten = np.asarray(intensity, dtype=np.float64).reshape(-1, 1)
        return cls(np.hstack([xyz, inten]))

    @classmethod
    def from_points(cls, points) -> "PointCloud":
        return cls([[p.x, p.y, p.z, p.intensity] for p in points])

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def xyz(self) -> np.ndarray:
        return self._data[:, :3]

    @property
    def intensity(self) -> np.ndarray:
        return self._data[:, 3]

    def __len__(self) -> int:
        return self._data.shape[0]

    def __getitem__(self, index: int) -> Point:
        x, y, z, i = self._data[index]
        return Point(float(x), float(y), float(z), float(i))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self._data.shape == other._data.shape and np.array_equal(self._data, other._data)

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)})"

    def subset(self, indices) -> "PointCloud":
        return PointCloud(self._data[np.asarray(indices, dtype=np.int64)], validate=False)

    @staticmethod
    def concat(*clouds: "PointCloud") -> "PointCloud":
        if not clouds:
            return PointCloud()
        return PointCloud(np.vstack([c.data for c in clouds]), validate=False)


@dataclass(frozen=True)
class OrientedBox:
    """Box with center, extents along its local x/y/z and a heading about world Z.

    w, h, l are the extents along local x, y and z respectively (l is the vertical extent).
    """

    cx: float
    cy: float
    cz: float
    w: float
    h: float
    l: float
    heading: float
    category: Category
    activity: Optional[ActivityClass] = None

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0 and self.l > 0):
            raise ValueError(f"Box extents must be positive, got {(self.w, self.h, self.l)}")
        if not all(math.isfinite(v) for v in (self.cx, self.cy, self.cz, self.heading)):
            raise ValueError("Box center and heading must be finite")
        object.__setattr__(self, "heading", wrap_angle(self.heading))
        if not isinstance(self.category, Category):
            object.__setattr__(self, "category", Category.from_name(self.category))
        if self.activity is not None and not isinstance(self.activity, ActivityClass):
            object.__setattr__(self, "activity", ActivityClass.from_name(self.activity))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz], dtype=np.float64)

    @property
    def extents(self) -> np.ndarray:
        return np.array([self.w, self.h, self.l], dtype=np.float64)

    @property
    def volume(self) -> float:
        return self.w * self.h * self.l

    @property
    def bottom(self) -> float:
        return self.cz - self.l / 2.0

    @property
    def top(self) -> float:
        return self.cz + self.l / 2.0

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.cx, self.cy, self.cz, self.w, self.h, self.l, self.heading)

    def with_changes(self, **changes) -> "OrientedBox":
        return replace(self, **changes)


@dataclass(frozen=True)
class VoxelFeature:
    count: int
    mean_x: float
    mean_y: float
    mean_z: float
    mean_intensity: float


@dataclass(frozen=True)
class VoxelGrid:
    """Sparse voxel grid; only non-empty cells are stored, sorted by linear cell index."""

    origin: np.ndarray
    voxel_size: float
    dims: Tuple[int, int, int]
    indices: np.ndarray  # (m, 3) int64
    counts: np.ndarray  # (m,) int64
    mean_xyz: np.ndarray  # (m, 3)
    mean_intensity: np.ndarray  # (m,)
    dropped: int = 0
    _cells: Dict = field(default=None, compare=False, repr=False)

    def __len__(self) -> int:
        return int(self.counts.shape[0])

    @property
    def cells(self) -> Dict[Tuple[int, int, int], VoxelFeature]:
        if self._cells is None:
            cells = {
                tuple(int(v) for v in idx): VoxelFeature(
                    int(c), float(m[0]), float(m[1]), float(m[2]), float(i)
                )
                for idx, c, m, i in zip(self.indices, self.counts, self.mean_xyz, self.mean_intensity)
            }
            object.__setattr__(self, "_cells", cells)
        return self._cells

    @property
    def centers(self) -> np.ndarray:
        """World-space centers of the stored cells."""
        return self.origin + (self.indices.astype(np.float64) + 0.5) * self.voxel_size
