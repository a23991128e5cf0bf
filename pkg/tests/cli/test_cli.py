import json

import pytest

from eplidar.cli import build_parser, main
from eplidar.config import ENV_CHECKPOINTS, ENV_DATA_ROOT, ENV_REPORTS
from eplidar.dataset import read_manifest

SCENARIO = """\
[scenario]
scenes = 2
duration = 1.0
seed = 5
bounds = 5.0, 15.0, -5.0, 5.0

[actors]
pedestrians = 8
vehicles = 1
street_furniture = 0

[activity_mix]
Walking = 1.0
Falling = 1.0

[sensor]
azimuth_steps = 120
elevation_channels = 24
"""

PIPELINE = """\
[paths]
scenario_spec = {spec}

[detector]
epochs = 1
frame_stride = 5
num_keypoints = 64

[classifier]
epochs = 2
batch_size = 16
num_points = 64

[run]
extract_source = ground_truth
split_ratios = 0.5, 0.0, 0.5
"""


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_DATA_ROOT, str(tmp_path / "data"))
    monkeypatch.setenv(ENV_CHECKPOINTS, str(tmp_path / "ckpt"))
    monkeypatch.setenv(ENV_REPORTS, str(tmp_path / "reports"))
    spec = tmp_path / "scenario.ini"
    spec.write_text(SCENARIO, encoding="utf-8")
    config = tmp_path / "pipeline.ini"
    config.write_text(PIPELINE.format(spec=spec), encoding="utf-8")
    return tmp_path, str(config)


def test_global_flags_work_on_either_side():
    parser = build_parser()
    before = parser.parse_args(["--seed", "3", "report", "--format", "csv"])
    after = parser.parse_args(["report", "--seed", "3", "--threads", "2"])
    assert before.seed == after.seed == 3
    assert before.formats == ["csv"]
    assert after.threads == 2
    assert not after.reference


def test_subcommand_required():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_missing_checkpoints_name_the_producer(workspace, capsys):
    tmp_path, config = workspace
    assert main(["simulate", "--config", config]) == 0
    assert main(["evaluate", "--config", config]) == 1
    err = capsys.readouterr().err
    assert "[ERROR]" in err
    assert "eplidar train-classifier" in err


def test_stage_without_dataset_names_simulate(workspace, capsys):
    _, config = workspace
    assert main(["train-detector", "--config", config]) == 1
    assert "eplidar simulate" in capsys.readouterr().err


def test_bad_config_is_reported(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[run]\nspeed = 11\n", encoding="utf-8")
    assert main(["report", "--reference", "--config", str(path)]) == 1
    assert "speed" in capsys.readouterr().err


def test_reference_report(workspace, capsys):
    tmp_path, config = workspace
    assert main(["report", "--reference", "--config", config, "--format", "text", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert "83.90%" in out
    assert sorted(p.name for p in (tmp_path / "reports").iterdir()) == ["reference.csv", "reference.txt"]


def test_simulate_writes_split_dataset(workspace, capsys):
    tmp_path, config = workspace
    assert main(["simulate", "--config", config]) == 0
    manifest = read_manifest(tmp_path / "data")
    assert [s.scene_id for s in manifest.scenes] == ["scene_000", "scene_001"]
    assert sorted(s.split for s in manifest.scenes) == ["test", "train"]
    assert all(s.frame_count == 10 for s in manifest.scenes)
    assert capsys.readouterr().out.count("frames") == 2


def test_simulate_is_reproducible(workspace):
    tmp_path, config = workspace
    main(["simulate", "--config", config, "--seed", "4"])
    first = (tmp_path / "data" / "scene_001" / "frames" / "000003.eplf").read_bytes()
    main(["simulate", "--config", config, "--seed", "4", "--threads", "3"])
    assert (tmp_path / "data" / "scene_001" / "frames" / "000003.eplf").read_bytes() == first


@pytest.mark.slow
def test_full_pipeline(workspace):
    tmp_path, config = workspace
    for command in ("simulate", "train-detector", "detect", "extract", "train-classifier", "evaluate"):
        assert main([command, "--config", config]) == 0, command
    assert (tmp_path / "ckpt" / "detector.epnn").exists()
    assert (tmp_path / "data" / "detections" / "scene_000.tsv").exists()
    assert (tmp_path / "data" / "instances" / "train" / "instances.tsv").exists()
    metrics = json.loads((tmp_path / "reports" / "metrics.json").read_text(encoding="utf-8"))
    assert set(metrics["classifiers"]) == {"pointnet", "voxel_mlp"}
    assert set(metrics["detection"]) == {"Pedestrian", "Vehicle"}
    for counts in metrics["classifiers"].values():
        assert sum(counts) > 0
    assert main(["report", "--config", config]) == 0
    assert (tmp_path / "reports" / "report.txt").exists()
