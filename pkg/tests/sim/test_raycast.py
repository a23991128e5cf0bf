import numpy as np
import pytest

from eplidar.sim import ASPHALT, CAR_PAINT, CLOTHING, box_mesh, capsule_mesh, cast_ray, cast_rays, ground_plane, icosphere_mesh


def test_ray_hits_ground_straight_down():
    hit = cast_ray([ground_plane()], (0.0, 0.0, 3.0), (0.0, 0.0, -1.0))
    assert hit is not None
    assert hit.distance == pytest.approx(3.0)
    np.testing.assert_allclose(np.abs(hit.surface_normal), [0.0, 0.0, 1.0], atol=1e-12)
    assert hit.material is ASPHALT


def test_ray_pointing_away_misses():
    assert cast_ray([ground_plane()], (0.0, 0.0, 3.0), (0.0, 0.0, 1.0)) is None


def test_box_face_distance_is_exact():
    box = box_mesh((2.0, 2.0, 2.0), CAR_PAINT, center=(5.0, 0.0, 0.0))
    hit = cast_ray([box], (0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    assert hit.distance == pytest.approx(4.0)
    np.testing.assert_allclose(hit.point, [4.0, 0.0, 0.0], atol=1e-12)


def test_nearest_surface_wins():
    near = box_mesh((1.0, 1.0, 1.0), CAR_PAINT, center=(3.0, 0.0, 0.0))
    far = box_mesh((1.0, 1.0, 1.0), CLOTHING, center=(6.0, 0.0, 0.0))
    hit = cast_ray([far, near], (0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    assert hit.material is CAR_PAINT
    assert hit.distance == pytest.approx(2.5)


def test_max_range_cuts_off_hits():
    box = box_mesh((2.0, 2.0, 2.0), CAR_PAINT, center=(5.0, 0.0, 0.0))
    assert cast_ray([box], (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), max_range=3.0) is None


def test_sphere_distance_within_tessellation_error():
    sphere = icosphere_mesh(1.0, CLOTHING, center=(5.0, 0.0, 0.0))
    hit = cast_ray([sphere], (0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    assert hit.distance == pytest.approx(4.0, abs=0.01)


def test_unnormalised_direction_gives_metric_distance():
    hit = cast_ray([ground_plane()], (0.0, 0.0, 2.0), (0.0, 0.0, -7.5))
    assert hit.distance == pytest.approx(2.0)


def test_capsule_is_hit_along_its_axis():
    capsule = capsule_mesh((4.0, 0.0, 0.0), (4.0, 0.0, 2.0), 0.2, CLOTHING)
    hit = cast_ray([capsule], (0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
    assert hit.distance == pytest.approx(3.8, abs=0.02)


def test_batch_matches_single_rays(rng):
    meshes = [ground_plane(), box_mesh((2.0, 2.0, 2.0), CAR_PAINT, center=(6.0, 1.0, 1.0))]
    origin = np.array([0.0, 0.0, 3.0])
    dirs = rng.normal(size=(200, 3))
    dirs[:, 0] = np.abs(dirs[:, 0])
    batch = cast_rays(meshes, origin.reshape(1, 3), dirs, max_range=50.0)
    for i in range(dirs.shape[0]):
        single = cast_ray(meshes, origin, dirs[i], max_range=50.0)
        if single is None:
            assert not batch.hit[i]
        else:
            assert batch.hit[i]
            assert batch.distance[i] == pytest.approx(single.distance, rel=1e-12)


def test_zero_direction_rejected():
    with pytest.raises(ValueError):
        cast_ray([ground_plane()], (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))
