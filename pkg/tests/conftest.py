import math

import numpy as np
import pytest

from eplidar.activity import ActivityClass
from eplidar.geom import Category, OrientedBox, PointCloud
from eplidar.sim import ScenarioSpec, SensorConfig


def random_cloud(rng: np.random.Generator, n: int, scale: float = 10.0) -> PointCloud:
    xyz = rng.uniform(-scale, scale, size=(n, 3))
    return PointCloud.from_xyz(xyz, rng.uniform(0.0, 1.0, size=n))


def ped_box(x: float = 10.0, y: float = 0.0, heading: float = 0.3,
            activity: ActivityClass = ActivityClass.WALKING) -> OrientedBox:
    return OrientedBox(x, y, 0.9, 0.6, 0.5, 1.8, heading, Category.PEDESTRIAN, activity)


def vehicle_box(x: float = 12.0, y: float = 3.0, heading: float = 1.0) -> OrientedBox:
    return OrientedBox(x, y, 0.75, 3.0, 1.6, 1.5, heading, Category.VEHICLE)


def points_in_box(rng: np.random.Generator, box: OrientedBox, n: int) -> PointCloud:
    local = rng.uniform(-0.5, 0.5, size=(n, 3)) * box.extents * 0.95
    c, s = math.cos(box.heading), math.sin(box.heading)
    xyz = np.empty_like(local)
    xyz[:, 0] = c * local[:, 0] - s * local[:, 1] + box.cx
    xyz[:, 1] = s * local[:, 0] + c * local[:, 1] + box.cy
    xyz[:, 2] = local[:, 2] + box.cz
    return PointCloud.from_xyz(xyz, rng.uniform(0.2, 0.8, size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_sensor():
    return SensorConfig(azimuth_steps=120, elevation_channels=24)


@pytest.fixture
def tiny_spec(tiny_sensor):
    """Two short scenes with a coarse sensor; renders in seconds."""
    return ScenarioSpec(scenes=2, duration=0.5, seed=3, pedestrians=3, vehicles=1, street_furniture=1,
                        sensor=tiny_sensor)
