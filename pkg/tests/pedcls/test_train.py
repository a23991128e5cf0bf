import numpy as np
import pytest

from eplidar.activity import ActivityClass
from eplidar.errors import CheckpointError, EmptySplitError, SingleClassError
from eplidar.geom import PointCloud
from eplidar.nn import save_checkpoint
from eplidar.pedcls import (
    ClassifierTrainConfig,
    PedestrianInstance,
    PointNetConfig,
    VoxelMLPConfig,
    accuracy,
    build_classifier,
    load_classifier,
    predict_instances,
    train_classifier,
    training_pool,
)
from tests.conftest import ped_box

N = 64
SMALL_POINTNET = PointNetConfig(num_points=N, point_mlp1=(16, 16), point_mlp2=(32, 64), propagation=(32, 16),
                                head=(32, 16), tnet_mlp=(16, 32), tnet_fc=(16,))
SMALL_VOXEL = VoxelMLPConfig(resolution=4, hidden=(32,))


def _instance(rng, activity, idx, labeled=True):
    if activity.binary.value == "Normal":
        xyz = np.column_stack([rng.normal(0, 0.1, N), rng.normal(0, 0.1, N), rng.uniform(-0.9, 0.9, N)])
    else:
        xyz = np.column_stack([rng.uniform(-0.9, 0.9, N), rng.normal(0, 0.1, N), rng.normal(-0.7, 0.05, N)])
    return PedestrianInstance(
        instance_id=f"s:{idx:06d}:000",
        points=PointCloud.from_xyz(xyz, rng.uniform(0, 1, N)),
        source_box=ped_box(activity=None),
        label=activity.binary if labeled else None,
        match_iou=0.9 if labeled else 0.3,
        activity=activity if labeled else None,
    )


def _dataset(rng, n):
    acts = [ActivityClass.WALKING, ActivityClass.RUNNING, ActivityClass.FALLING, ActivityClass.DIZZY_WALKING]
    return [_instance(rng, acts[i % 4], i) for i in range(n)]


def test_voxel_mlp_learns_separable_shapes(rng):
    train, test = _dataset(rng, 40), _dataset(rng, 20)
    cfg = ClassifierTrainConfig(epochs=15, batch_size=8, seed=3)
    model, history = train_classifier(train, kind="voxel_mlp", model_config=SMALL_VOXEL, config=cfg)
    assert len(history.train_loss) == 15
    assert history.best_epoch == 15
    assert accuracy(model, test) >= 0.9


def test_pointnet_learns_separable_shapes(rng):
    train, test = _dataset(rng, 40), _dataset(rng, 20)
    cfg = ClassifierTrainConfig(epochs=20, batch_size=8, seed=3)
    model, history = train_classifier(train, kind="pointnet", model_config=SMALL_POINTNET, config=cfg)
    assert len(history.train_loss) == 20
    assert history.train_loss[-1] < history.train_loss[0]
    assert not model.training
    assert accuracy(model, test) >= 0.9


def test_training_is_deterministic(rng):
    train = _dataset(rng, 16)
    cfg = ClassifierTrainConfig(epochs=2, batch_size=4, seed=1)
    _, a = train_classifier(train, kind="pointnet", model_config=SMALL_POINTNET, config=cfg)
    _, b = train_classifier(train, kind="pointnet", model_config=SMALL_POINTNET, config=cfg)
    assert a.train_loss == b.train_loss


def test_early_stopping_keeps_history_aligned(rng):
    train, val = _dataset(rng, 16), _dataset(rng, 8)
    cfg = ClassifierTrainConfig(epochs=30, batch_size=8, patience=2, seed=0)
    _, history = train_classifier(train, val, kind="voxel_mlp", model_config=SMALL_VOXEL, config=cfg)
    assert len(history.val_accuracy) == len(history.train_loss)
    assert history.best_epoch == int(np.argmax(history.val_accuracy)) + 1
    if history.stopped_early:
        assert len(history.train_loss) == history.best_epoch + 2


def test_unlabeled_instances_never_train(rng):
    pool = _dataset(rng, 4) + [_instance(rng, ActivityClass.WALKING, 99, labeled=False)]
    assert len(training_pool(pool)) == 4
    assert [i.activity for i in training_pool(pool, [ActivityClass.FALLING])] == [ActivityClass.FALLING]


def test_single_class_rejected(rng):
    walkers = [_instance(rng, ActivityClass.WALKING, i) for i in range(4)]
    with pytest.raises(SingleClassError):
        train_classifier(walkers, kind="voxel_mlp", model_config=SMALL_VOXEL)


def test_activity_filter_can_leave_one_class(rng):
    cfg = ClassifierTrainConfig(activities=(ActivityClass.WALKING, ActivityClass.RUNNING))
    with pytest.raises(SingleClassError):
        train_classifier(_dataset(rng, 8), kind="voxel_mlp", model_config=SMALL_VOXEL, config=cfg)


def test_nothing_labeled(rng):
    with pytest.raises(EmptySplitError):
        train_classifier([_instance(rng, ActivityClass.WALKING, 0, labeled=False)])


def test_unknown_kind(rng):
    with pytest.raises(ValueError):
        train_classifier(_dataset(rng, 4), kind="svm")


@pytest.mark.parametrize("kind,model_config", [("pointnet", SMALL_POINTNET), ("voxel_mlp", SMALL_VOXEL)])
def test_checkpoint_roundtrip(tmp_path, rng, kind, model_config):
    data = _dataset(rng, 8)
    path = tmp_path / f"{kind}.epnn"
    model, _ = train_classifier(data, kind=kind, model_config=model_config,
                                config=ClassifierTrainConfig(epochs=1, batch_size=4), checkpoint_path=path)
    loaded = load_classifier(path)
    assert loaded.config == model.config
    np.testing.assert_array_equal(predict_instances(loaded, data), predict_instances(model, data))


def test_detector_checkpoint_is_not_a_classifier(tmp_path):
    path = save_checkpoint(tmp_path / "x.epnn", {}, {"kind": "detector"})
    with pytest.raises(CheckpointError):
        load_classifier(path)


def test_predictions_are_probabilities(rng):
    data = _dataset(rng, 6)
    model, _ = train_classifier(data, kind="voxel_mlp", model_config=SMALL_VOXEL,
                                config=ClassifierTrainConfig(epochs=1))
    probs = predict_instances(model, data)
    assert probs.shape == (6, 2)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)
    assert predict_instances(model, []).shape == (0, 2)


@pytest.mark.parametrize("kind,model_config", [("pointnet", SMALL_POINTNET), ("voxel_mlp", SMALL_VOXEL)])
def test_prediction_keeps_training_mode(rng, kind, model_config):
    data = _dataset(rng, 4)
    model = build_classifier(kind, model_config)
    model.train()
    first = predict_instances(model, data)
    assert model.training
    np.testing.assert_array_equal(predict_instances(model, data), first)
