import numpy as np
import pytest

from eplidar.activity import ActivityClass
from eplidar.dataset import (
    Annotation,
    DatasetManifest,
    SceneEntry,
    load_scene_frames,
    open_dataset,
    read_manifest,
    split_dataset,
    validate_dataset,
    write_annotations,
    write_manifest,
    write_scene,
)
from eplidar.errors import AnnotationError, ManifestError, MissingArtifactError, SplitError
from tests.conftest import ped_box, random_cloud, vehicle_box


def _frames(rng, n):
    for i in range(n):
        cloud = random_cloud(rng, 20)
        yield cloud, [ped_box(x=8.0 + i), vehicle_box()]


@pytest.fixture
def dataset(tmp_path, rng):
    entries = [
        write_scene(tmp_path, f"scene_{k:03d}", _frames(rng, 3), seed=k, duration=0.3,
                    object_ids=[(10, 20)] * 3)
        for k in range(4)
    ]
    manifest = DatasetManifest(root=tmp_path, scenes=tuple(entries))
    write_manifest(manifest)
    return manifest


def test_write_scene_layout(dataset, tmp_path):
    entry = dataset.scene("scene_002")
    assert entry.frame_count == 3
    assert (tmp_path / "scene_002" / "frames" / "000002.eplf").exists()
    assert entry.annotation_path(tmp_path) == tmp_path / "scene_002" / "annotations.tsv"


def test_manifest_roundtrip(dataset, tmp_path):
    back = read_manifest(tmp_path)
    assert back.scenes == dataset.scenes
    assert back.scene("scene_001").seed == 1
    assert back.scene("scene_001").duration == 0.3


def test_missing_manifest_names_producer(tmp_path):
    with pytest.raises(MissingArtifactError) as err:
        read_manifest(tmp_path / "nowhere")
    assert err.value.producer == "simulate"
    assert "eplidar simulate" in str(err.value)


def test_duplicate_scene_ids_rejected(tmp_path):
    entry = SceneEntry("s", 0, "s/{frame:06d}.eplf", "s/a.tsv")
    with pytest.raises(ManifestError):
        DatasetManifest(root=tmp_path, scenes=(entry, entry))


def test_load_scene_frames_groups_annotations(dataset):
    frames = list(load_scene_frames(dataset, "scene_000"))
    assert [f for f, _, _ in frames] == [0, 1, 2]
    _, cloud, anns = frames[1]
    assert len(cloud) == 20
    assert [a.object_id for a in anns] == [10, 20]
    assert anns[0].cx == pytest.approx(9.0)


def test_load_scene_frames_rejects_unknown_frame(dataset):
    with pytest.raises(ManifestError):
        list(load_scene_frames(dataset, "scene_000", [5]))


def test_split_is_seeded_and_whole_scene(dataset):
    a = split_dataset(dataset, (0.5, 0.25, 0.25), seed=4)
    b = split_dataset(dataset, (0.5, 0.25, 0.25), seed=4)
    assert [s.split for s in a.scenes] == [s.split for s in b.scenes]
    assert sorted(s.split for s in a.scenes) == ["test", "train", "train", "val"]
    assert len(a.scenes_in("train")) == 2


def test_split_counts_use_largest_remainder(tmp_path):
    entries = tuple(SceneEntry(f"s{i:02d}", 0, "x", "y") for i in range(10))
    manifest = split_dataset(DatasetManifest(tmp_path, entries), (0.6, 0.2, 0.2), seed=0)
    counts = [len(manifest.scenes_in(s)) for s in ("train", "val", "test")]
    assert counts == [6, 2, 2]


def test_two_scene_split_without_validation(tmp_path):
    entries = tuple(SceneEntry(f"s{i}", 0, "x", "y") for i in range(2))
    manifest = split_dataset(DatasetManifest(tmp_path, entries), (0.5, 0.0, 0.5), seed=9)
    assert sorted(s.split for s in manifest.scenes) == ["test", "train"]


def test_every_nonzero_split_gets_a_scene(tmp_path):
    entries = tuple(SceneEntry(f"s{i}", 0, "x", "y") for i in range(3))
    manifest = split_dataset(DatasetManifest(tmp_path, entries), (0.9, 0.05, 0.05), seed=1)
    assert [len(manifest.scenes_in(s)) for s in ("train", "val", "test")] == [1, 1, 1]


@pytest.mark.parametrize("ratios", [(0.5, 0.5, 0.5), (1.0, 0.0), (1.2, -0.1, -0.1)])
def test_bad_ratios_rejected(dataset, ratios):
    with pytest.raises(SplitError):
        split_dataset(dataset, ratios)


def test_too_few_scenes_for_splits(tmp_path):
    entries = (SceneEntry("only", 0, "x", "y"),)
    with pytest.raises(SplitError):
        split_dataset(DatasetManifest(tmp_path, entries), (0.6, 0.2, 0.2))


def test_split_survives_manifest_roundtrip(dataset, tmp_path):
    write_manifest(split_dataset(dataset, (0.5, 0.25, 0.25), seed=2))
    assert all(s.split is not None for s in read_manifest(tmp_path).scenes)


def test_validation_counts(dataset):
    report = validate_dataset(dataset)
    assert report.scenes == 4
    assert report.frames == 12
    assert report.annotations == 24
    assert report.per_category == {"Pedestrian": 12, "Vehicle": 12}
    assert report.per_activity == {"Walking": 12}
    assert report.oversized == 0


def test_validation_warns_on_oversized_boxes(tmp_path, rng):
    big = vehicle_box().with_changes(w=5.0)
    entry = write_scene(tmp_path, "scene_000", [(random_cloud(rng, 5), [big])])
    report = validate_dataset(DatasetManifest(tmp_path, (entry,)))
    assert report.oversized == 1
    assert "exceed" in report.warnings[0]


def test_validation_rejects_unknown_activity(tmp_path, rng):
    entry = write_scene(tmp_path, "scene_000", [(random_cloud(rng, 5), [])])
    bad = Annotation(0, 0, 1.0, 1.0, 0.9, 0.6, 0.5, 1.8, 0.0, "Pedestrian", "Skipping")
    write_annotations(entry.annotation_path(tmp_path), [bad])
    with pytest.raises(AnnotationError):
        validate_dataset(DatasetManifest(tmp_path, (entry,)))


def test_validation_rejects_missing_frame(dataset, tmp_path):
    (tmp_path / "scene_003" / "frames" / "000001.eplf").unlink()
    with pytest.raises(ManifestError):
        open_dataset(tmp_path)


def test_validation_rejects_annotation_past_last_frame(tmp_path, rng):
    entry = write_scene(tmp_path, "scene_000", [(random_cloud(rng, 5), [])])
    write_annotations(entry.annotation_path(tmp_path),
                      [Annotation.from_box(4, 0, ped_box(activity=ActivityClass.RUNNING))])
    with pytest.raises(ManifestError):
        validate_dataset(DatasetManifest(tmp_path, (entry,)))


def test_scene_writes_are_byte_identical(tmp_path):
    def build(root):
        return write_scene(root, "scene_000", _frames(np.random.default_rng(0), 2), seed=1)

    build(tmp_path / "a")
    build(tmp_path / "b")
    for rel in ("scene_000/annotations.tsv", "scene_000/frames/000001.eplf"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
