import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class SensorConfig:
    """Elevated LiDAR looking along +x from (x, y, mount_height), pitched down."""

    mount_height: float = 3.0
    pitch_down: float = math.radians(30.0)
    azimuth_fov: float = math.radians(120.0)
    azimuth_steps: int = 600
    elevation_channels: int = 64
    elevation_span: float = math.radians(45.0)
    max_range: float = 60.0
    # Gaussian range noise, truncated at three sigma
    range_noise_sigma: float = 0.01
    frame_rate: float = 10.0
    position_x: float = 0.0
    position_y: float = 0.0
    yaw: float = 0.0
    distance_falloff: bool = False
    falloff_reference: float = 10.0

    def __post_init__(self):
        if self.mount_height <= 0:
            raise ValueError(f"mount_height must be positive, got {self.mount_height}")
        if self.azimuth_steps < 1 or self.elevation_channels < 1:
            raise ValueError("azimuth_steps and elevation_channels must be >= 1")
        if self.range_noise_sigma < 0:
            raise ValueError(f"range_noise_sigma must be >= 0, got {self.range_noise_sigma}")
        if self.max_range <= 0 or self.frame_rate <= 0:
            raise ValueError("max_range and frame_rate must be positive")

    @property
    def rays_per_frame(self) -> int:
        return self.azimuth_steps * self.elevation_channels

    @property
    def origin(self) -> np.ndarray:
        return np.array([self.position_x, self.position_y, self.mount_height])


FULL_SCALE_SENSOR = SensorConfig(azimuth_steps=1800, elevation_channels=200)


def _grid(span: float, steps: int) -> np.ndarray:
    if steps == 1:
        return np.zeros((1,))
    return np.linspace(-span / 2.0, span / 2.0, steps)


def ray_grid(sensor: SensorConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Origin (3,) and unit directions (channels * steps, 3); ray index = channel * steps + step."""
    az = _grid(sensor.azimuth_fov, sensor.azimuth_steps) + sensor.yaw
    el = _grid(sensor.elevation_span, sensor.elevation_channels) - sensor.pitch_down
    el_g, az_g = np.meshgrid(el, az, indexing="ij")
    dirs = np.stack(
        [np.cos(el_g) * np.cos(az_g), np.cos(el_g) * np.sin(az_g), np.sin(el_g)], axis=-1
    ).reshape(-1, 3)
    return sensor.origin, dirs


def intensity(reflectivity: float, incidence: float, distance: float = 0.0,
              falloff: bool = False, reference: float = 10.0) -> float:
    """Return reflectivity times cos(incidence), clamped to [0, 1].

    With ``falloff`` the value is further scaled by min(1, (reference / distance)^2).
    """
    value = reflectivity * math.cos(incidence)
    if falloff and distance > 0:
        value *= min(1.0, (reference / distance) ** 2)
    return min(1.0, max(0.0, value))


def intensity_many(reflectivity: np.ndarray, cos_incidence: np.ndarray, distance: np.ndarray,
                   falloff: bool = False, reference: float = 10.0) -> np.ndarray:
    value = reflectivity * cos_incidence
    if falloff:
        with np.errstate(divide="ignore"):
            value = value * np.minimum(1.0, (reference / np.maximum(distance, 1e-12)) ** 2)
    return np.clip(value, 0.0, 1.0)
