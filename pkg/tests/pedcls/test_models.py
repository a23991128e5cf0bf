from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
import torch

from eplidar.errors import ShapeMismatch
from eplidar.nn import DTYPE, cross_entropy, finite_difference_check, module_gradient_check
from eplidar.pedcls import (
    PointNet,
    PointNetConfig,
    TNet,
    VoxelMLP,
    VoxelMLPConfig,
    occupancy_grid,
    pointnet_forward,
    transform_regularizer,
    voxel_mlp_forward,
)

SMALL = PointNetConfig(num_points=64, point_mlp1=(16, 16), point_mlp2=(32, 64), propagation=(32, 16),
                       head=(32, 16), tnet_mlp=(16, 32), tnet_fc=(16,), seed=2)


def _points(rng, n=64):
    return np.hstack([rng.normal(scale=0.4, size=(n, 3)), rng.uniform(size=(n, 1))])


def test_tnet_starts_as_identity(rng):
    tnet = TNet(3, (8, 16), (8,), torch.Generator().manual_seed(0))
    out = tnet(torch.as_tensor(_points(rng)[None, :, :3], dtype=DTYPE))
    assert torch.equal(out[0], torch.eye(3, dtype=DTYPE))


def test_pointnet_ignores_point_order(rng):
    model = PointNet(SMALL)
    pts = _points(rng)
    a = pointnet_forward(model, pts)
    b = pointnet_forward(model, pts[rng.permutation(64)])
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)
    assert a.sum() == pytest.approx(1.0)


def test_voxel_mlp_ignores_point_order_exactly(rng):
    model = VoxelMLP(VoxelMLPConfig(resolution=4, hidden=(16,)))
    pts = _points(rng)
    a = voxel_mlp_forward(model, pts)
    b = voxel_mlp_forward(model, pts[rng.permutation(64)])
    assert a.tobytes() == b.tobytes()


def test_inference_is_repeatable(rng):
    model = PointNet(SMALL)
    pts = _points(rng)
    np.testing.assert_array_equal(pointnet_forward(model, pts), pointnet_forward(model, pts))


def test_dropout_only_in_training_mode(rng):
    model = PointNet(PointNetConfig(**{**SMALL.to_dict(), "dropout": 0.5}))
    model.eval()
    pts = _points(rng)
    train_a = pointnet_forward(model, pts, training=True, generator=torch.Generator().manual_seed(1))
    train_b = pointnet_forward(model, pts, training=True, generator=torch.Generator().manual_seed(1))
    train_c = pointnet_forward(model, pts, training=True, generator=torch.Generator().manual_seed(2))
    np.testing.assert_array_equal(train_a, train_b)
    assert not np.array_equal(train_a, train_c)
    assert not model.training


def test_pointnet_shape_checks(rng):
    model = PointNet(SMALL)
    with pytest.raises(ShapeMismatch):
        pointnet_forward(model, _points(rng, 10))
    with pytest.raises(ShapeMismatch):
        model(torch.zeros(2, 64, 4, dtype=DTYPE))


def test_batch_output_shapes(rng):
    model = PointNet(SMALL)
    logits, feat_t = model(torch.as_tensor(np.stack([_points(rng)[:, :3]] * 3), dtype=DTYPE))
    assert logits.shape == (3, 2)
    assert feat_t.shape == (3, 16, 16)


def test_regularizer_values():
    eye = torch.eye(4, dtype=DTYPE)
    assert float(transform_regularizer(eye)) == 0.0
    assert float(transform_regularizer(2.0 * torch.eye(3, dtype=DTYPE))) == 27.0
    batch = torch.stack([torch.eye(3, dtype=DTYPE), 2.0 * torch.eye(3, dtype=DTYPE)])
    assert float(transform_regularizer(batch)) == 13.5


def test_regularizer_gradient():
    a = torch.randn(3, 3, dtype=DTYPE, generator=torch.Generator().manual_seed(4))
    assert finite_difference_check(transform_regularizer, [a]) < 1e-6


def test_regularizer_needs_square():
    with pytest.raises(ShapeMismatch):
        transform_regularizer(torch.zeros(2, 3, dtype=DTYPE))


def test_occupancy_grid_cells():
    pts = np.array([[0.0, 0.0, 0.0, 0.4], [0.01, 0.01, 0.01, 0.8], [5.0, 5.0, 5.0, 1.0]])
    grid = occupancy_grid(pts, resolution=2, extents=2.0)
    occ, inten = grid[:8], grid[8:]
    # the far point clips into the last cell
    assert occ.tolist() == [0, 0, 0, 0, 0, 0, 0, 1]
    assert inten[7] == pytest.approx((0.4 + 0.8 + 1.0) / 3)


def test_config_dict_roundtrip():
    assert PointNetConfig.from_dict(SMALL.to_dict()) == SMALL
    cfg = VoxelMLPConfig(resolution=6, hidden=(32, 8))
    assert VoxelMLPConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.input_dim == 2 * 216


def test_occupancy_grid_spans_box_extents():
    extents = np.array([0.6, 0.5, 1.8])
    on_face = np.array([[0.3, 0.25, 0.9, 1.0]])
    grid = occupancy_grid(on_face, resolution=8, extents=extents)
    assert np.flatnonzero(grid[:512]).tolist() == [511]
    corner = occupancy_grid(np.array([[-0.3, -0.25, -0.9, 1.0]]), resolution=8, extents=extents)
    assert np.flatnonzero(corner[:512]).tolist() == [0]
    # one cell along z is 1.8 / 8 m tall
    mid = occupancy_grid(np.array([[0.0, 0.0, -0.9 + 0.3, 1.0]]), resolution=8, extents=extents)
    assert np.flatnonzero(mid[:512]).tolist() == [np.ravel_multi_index((4, 4, 1), (8, 8, 8))]


def test_occupancy_grid_rejects_empty_extents():
    with pytest.raises(ValueError):
        occupancy_grid(np.zeros((1, 4)), resolution=4, extents=(0.6, 0.0, 1.8))


def test_voxel_mlp_uses_given_extents(rng):
    model = VoxelMLP(VoxelMLPConfig(resolution=4, hidden=(16,)))
    pts = _points(rng)
    default = model.featurize(pts)
    np.testing.assert_array_equal(default.numpy(), model.featurize(pts, [2.2, 2.2, 2.2]).numpy())
    assert not torch.equal(default, model.featurize(pts, [0.6, 0.5, 1.8]))


def test_inference_leaves_model_state_alone(rng):
    model = PointNet(PointNetConfig(**{**SMALL.to_dict(), "dropout": 0.5}))
    model.train()
    state = model.dropout_generator.get_state()
    pts = _points(rng)
    pointnet_forward(model, pts)
    pointnet_forward(model, pts, training=True, generator=torch.Generator().manual_seed(1))
    assert model.training
    assert torch.equal(model.dropout_generator.get_state(), state)
    assert all(d.generator is model.dropout_generator for d in model.dropouts)


def test_concurrent_inference_matches_sequential(rng):
    model = PointNet(PointNetConfig(**{**SMALL.to_dict(), "dropout": 0.5}))
    model.train()
    clouds = [_points(rng) for _ in range(6)]
    expected = [pointnet_forward(model, c) for c in clouds]
    with ThreadPoolExecutor(max_workers=3) as pool:
        got = list(pool.map(lambda c: pointnet_forward(model, c), clouds * 4))
    for i, probs in enumerate(got):
        np.testing.assert_array_equal(probs, expected[i % len(clouds)])
    assert model.training


TINY = PointNetConfig(num_points=8, point_mlp1=(4, 4), point_mlp2=(6, 8), propagation=(5, 4), head=(6,),
                      tnet_mlp=(4, 6), tnet_fc=(5,), dropout=0.0, seed=11)


def _jitter(model, seed, scale=0.1):
    # moves the transform nets off their identity start so every layer carries gradient
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in model.parameters():
            p.add_(scale * torch.randn(p.shape, dtype=p.dtype, generator=gen))


def test_tnet_gradients():
    tnet = TNet(3, (4, 6), (5,), torch.Generator().manual_seed(3))
    _jitter(tnet, 4)
    x = torch.randn(2, 8, 3, dtype=DTYPE, generator=torch.Generator().manual_seed(5))
    assert module_gradient_check(tnet, lambda call: (call(x) ** 2).sum()) < 1e-6


def test_pointnet_parameter_gradients():
    model = PointNet(TINY)
    _jitter(model, 6)
    x = torch.randn(2, 8, 3, dtype=DTYPE, generator=torch.Generator().manual_seed(7))
    y = torch.tensor([0, 1])

    def loss(call):
        logits, feat_t = call(x)
        return cross_entropy(logits, y) + transform_regularizer(feat_t)

    assert module_gradient_check(model, loss) < 1e-5


def test_pointnet_input_gradients():
    model = PointNet(TINY)
    _jitter(model, 8)
    x = torch.randn(1, 8, 3, dtype=DTYPE, generator=torch.Generator().manual_seed(9))
    assert finite_difference_check(lambda pts: model(pts)[0][0, 1], [x]) < 1e-5
