import math

import numpy as np
import pytest

from eplidar.sim import FULL_SCALE_SENSOR, SensorConfig, intensity, ray_grid


def test_ray_grid_shape_and_unit_length():
    sensor = SensorConfig(azimuth_steps=30, elevation_channels=8)
    origin, dirs = ray_grid(sensor)
    np.testing.assert_allclose(origin, [0.0, 0.0, 3.0])
    assert dirs.shape == (240, 3)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0)


def test_grid_centre_looks_forward_and_down():
    sensor = SensorConfig(azimuth_steps=1, elevation_channels=1)
    _, dirs = ray_grid(sensor)
    expected = [math.cos(sensor.pitch_down), 0.0, -math.sin(sensor.pitch_down)]
    np.testing.assert_allclose(dirs[0], expected, atol=1e-12)


def test_full_scale_sensor_exceeds_350k_rays():
    assert FULL_SCALE_SENSOR.rays_per_frame >= 350_000


@pytest.mark.parametrize("incidence,expected", [(0.0, 0.5), (math.pi / 3, 0.25), (math.pi / 2, 0.0)])
def test_intensity_is_reflectivity_times_cosine(incidence, expected):
    assert intensity(0.5, incidence) == pytest.approx(expected, abs=1e-12)


def test_intensity_falloff_only_beyond_reference():
    assert intensity(0.8, 0.0, distance=5.0, falloff=True) == pytest.approx(0.8)
    assert intensity(0.8, 0.0, distance=20.0, falloff=True) == pytest.approx(0.2)
    assert intensity(0.8, 0.0, distance=20.0) == pytest.approx(0.8)


def test_invalid_sensor_rejected():
    with pytest.raises(ValueError):
        SensorConfig(mount_height=0.0)
    with pytest.raises(ValueError):
        SensorConfig(range_noise_sigma=-0.1)
