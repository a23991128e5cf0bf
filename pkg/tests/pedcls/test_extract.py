import numpy as np
import pytest

from eplidar.activity import ActivityClass, BinaryLabel
from eplidar.errors import EmptyInstance
from eplidar.geom import PointCloud
from eplidar.pedcls import PedestrianInstance, crop_and_normalize, extract_frame_instances, match_and_label
from tests.conftest import ped_box, points_in_box, random_cloud, vehicle_box


def test_identical_falling_box_is_abnormal():
    gt = ped_box(activity=ActivityClass.FALLING)
    (m,) = match_and_label([gt.with_changes(activity=None)], [gt])
    assert m.label is BinaryLabel.ABNORMAL
    assert m.gt_index == 0
    assert m.match_iou == pytest.approx(1.0)


def test_weak_overlap_stays_unlabeled():
    gt = ped_box()
    det = gt.with_changes(cx=gt.cx + 0.25, activity=None)
    (m,) = match_and_label([det], [gt])
    assert 0.0 < m.match_iou < 0.65
    assert m.gt_index == 0
    assert m.label is None


def test_threshold_is_a_parameter():
    gt = ped_box(activity=ActivityClass.RUNNING)
    det = gt.with_changes(cx=gt.cx + 0.25, activity=None)
    (m,) = match_and_label([det], [gt], threshold=0.2)
    assert m.label is BinaryLabel.NORMAL


def test_matching_is_one_to_one_by_best_iou():
    gt = ped_box(activity=ActivityClass.DIZZY_WALKING)
    close = gt.with_changes(cx=gt.cx + 0.02, activity=None)
    closer = gt.with_changes(cx=gt.cx + 0.01, activity=None)
    far = ped_box(x=30.0, activity=None)
    matches = match_and_label([close, closer, far], [gt])
    assert [m.gt_index for m in matches] == [-1, 0, -1]
    assert [m.label for m in matches] == [None, BinaryLabel.ABNORMAL, None]


def test_vehicles_never_match():
    car = vehicle_box(x=10.0, y=0.0)
    (m,) = match_and_label([ped_box(activity=None)], [car])
    assert m.gt_index == -1


def test_crop_has_exact_size_in_box_frame(rng):
    box = ped_box()
    cloud = PointCloud.concat(points_in_box(rng, box, 600), random_cloud(rng, 300, scale=40.0))
    crop = crop_and_normalize(cloud, box, 128)
    assert len(crop) == 128
    half = box.extents * 1.1 / 2 + 1e-9
    assert np.all(np.abs(crop.xyz) <= half)
    assert np.all((crop.intensity >= 0.2) & (crop.intensity <= 0.8))


def test_sparse_crop_is_padded_with_duplicates(rng):
    box = ped_box()
    crop = crop_and_normalize(points_in_box(rng, box, 10), box, 64, seed=3)
    assert len(crop) == 64
    assert len(np.unique(crop.xyz, axis=0)) == 10


def test_crop_is_seeded(rng):
    box = ped_box()
    cloud = points_in_box(rng, box, 20)
    assert crop_and_normalize(cloud, box, 50, seed=1) == crop_and_normalize(cloud, box, 50, seed=1)


def test_empty_crop_raises(rng):
    with pytest.raises(EmptyInstance):
        crop_and_normalize(points_in_box(rng, vehicle_box(x=30.0), 20), ped_box(), 32)


def test_frame_extraction_counts(rng):
    walker = ped_box(x=10.0, activity=ActivityClass.WALKING)
    faller = ped_box(x=14.0, y=2.0, activity=ActivityClass.FALLING)
    cloud = PointCloud.concat(points_in_box(rng, walker, 80), points_in_box(rng, faller, 80))
    dets = [
        walker.with_changes(activity=None),
        faller.with_changes(cx=faller.cx + 0.3, activity=None),
        ped_box(x=25.0, activity=None),
        vehicle_box(),
    ]
    instances, stats = extract_frame_instances(cloud, dets, [walker, faller], "scene_007", 12, "train", n=32)
    assert stats.detections == 3
    assert stats.labeled == 1
    assert stats.unlabeled == 1
    assert stats.empty == 1
    assert stats.per_label == {"Normal": 1}
    assert [i.instance_id for i in instances] == ["scene_007:000012:000", "scene_007:000012:001"]
    assert instances[0].activity is ActivityClass.WALKING
    assert not instances[1].labeled
    assert all(len(i.points) == 32 and i.split == "train" for i in instances)


def test_instance_invariants():
    pts = PointCloud(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        PedestrianInstance("a", pts, ped_box(), BinaryLabel.NORMAL, 0.0)
    with pytest.raises(ValueError):
        PedestrianInstance("b", pts, ped_box(), None, 0.3, activity=ActivityClass.RUNNING)
    with pytest.raises(ValueError):
        PedestrianInstance("c", pts, ped_box(), None, 1.5)
