import numpy as np
import pytest
import torch

from eplidar.detect import VoxelSetAbstraction, aggregate_keypoint_features, find_neighbourhoods, sample_keypoints
from eplidar.errors import SamplingError
from eplidar.geom import PointCloud, voxelize
from tests.conftest import random_cloud


def _grid(cloud):
    return voxelize(cloud, (-10.0, -10.0, -10.0), 0.5, (40, 40, 40))


def test_keypoints_start_at_first_point(rng):
    cloud = random_cloud(rng, 200)
    kp = sample_keypoints(cloud, 16)
    assert kp.shape == (16, 3)
    np.testing.assert_array_equal(kp[0], cloud.xyz[0])


def test_small_cloud_uses_every_point(rng):
    cloud = random_cloud(rng, 5)
    assert sample_keypoints(cloud, 50).shape == (5, 3)


def test_empty_cloud_has_no_keypoints():
    with pytest.raises(SamplingError):
        sample_keypoints(PointCloud(), 4)


def test_neighbourhoods_match_brute_force(rng):
    cloud = random_cloud(rng, 300, scale=4.0)
    grid = _grid(cloud)
    kp = sample_keypoints(cloud, 10)
    nb = find_neighbourhoods(kp, grid, (1.0,))[0]
    d = np.linalg.norm(kp[:, None, :] - grid.centers[None, :, :], axis=2)
    expected = sorted(zip(*np.nonzero(d <= 1.0)))
    assert sorted(zip(nb.keypoint_index.tolist(), nb.voxel_index.tolist())) == [(int(a), int(b)) for a, b in expected]
    assert np.all(np.diff(nb.keypoint_index) >= 0)


def test_isolated_keypoint_gets_zero_features(rng):
    cloud = random_cloud(rng, 100, scale=2.0)
    module = VoxelSetAbstraction(generator=torch.Generator().manual_seed(0))
    kp = np.vstack([cloud.xyz[:3], [[9.0, 9.0, 9.0]]])
    feats = aggregate_keypoint_features(module, kp, _grid(cloud))
    assert feats.shape == (4, module.out_dim)
    assert torch.all(feats[3] == 0)
    assert torch.any(feats[0] > 0)


def test_aggregation_ignores_point_order(rng):
    cloud = random_cloud(rng, 150, scale=3.0)
    shuffled = cloud.subset(rng.permutation(len(cloud)))
    module = VoxelSetAbstraction(generator=torch.Generator().manual_seed(1))
    kp = cloud.xyz[:8]
    a = aggregate_keypoint_features(module, kp, _grid(cloud))
    b = aggregate_keypoint_features(module, kp, _grid(shuffled))
    torch.testing.assert_close(a, b, rtol=0, atol=1e-12)
