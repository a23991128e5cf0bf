import json

import pytest

from eplidar.eval import (
    ConfusionMatrix2,
    build_report,
    emit_report,
    evaluate_detections,
    published_reference_report,
    read_csv,
    read_json,
    render_text,
    write_json,
)
from eplidar.geom import Category
from tests.conftest import vehicle_box


@pytest.fixture
def report():
    gts = [vehicle_box(), vehicle_box(x=30.0)]
    det = evaluate_detections([([(gts[0], 0.9), (vehicle_box(x=50.0), 0.6)], gts)], Category.VEHICLE)
    return build_report(
        detection=[det],
        confusions={"pointnet": ConfusionMatrix2(40, 10, 5, 45), "voxel_mlp": ConfusionMatrix2(30, 20, 15, 35)},
        config={"seed": 0},
    )


def test_json_roundtrip(tmp_path, report):
    back = read_json(write_json(report, tmp_path / "metrics.json"))
    assert back.to_dict() == report.to_dict()
    assert back.classifiers["pointnet"].accuracy == 0.85


def test_json_is_sorted_and_stable(tmp_path, report):
    a = write_json(report, tmp_path / "a.json").read_bytes()
    b = write_json(report, tmp_path / "b.json").read_bytes()
    assert a == b
    assert list(json.loads(a)) == ["classifiers", "config", "detection"]


def test_csv_rows(tmp_path, report):
    (path,) = emit_report(report, tmp_path, ["csv"])
    table = read_csv(path)
    acc = table[(table.metric == "accuracy") & (table.model == "voxel_mlp")]
    assert acc.value.tolist() == [0.65]
    ap = table[(table.metric == "ap") & (table.category == "Vehicle")]
    assert ap.value.tolist() == [0.5]


def test_text_rendering(report):
    text = render_text(report)
    assert "Voxel-Based MLP" in text
    assert " 85.00%" in text
    assert "Total instances: 100" in text


def test_reference_report_text():
    text = render_text(published_reference_report())
    assert "83.90%" in text
    assert "2437" in text and "1233" in text


def test_svg_output_is_deterministic(tmp_path, report):
    first = emit_report(report, tmp_path / "a", ["svg"])
    second = emit_report(report, tmp_path / "b", ["svg"])
    assert [p.name for p in first] == ["report_pr_curves.svg", "report_confusion_pointnet.svg",
                                       "report_confusion_voxel_mlp.svg"]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


def test_all_formats(tmp_path, report):
    names = sorted(p.name for p in emit_report(report, tmp_path, prefix="run"))
    assert names[:2] == ["run.csv", "run.txt"]
    assert len(names) == 5


def test_unknown_format(tmp_path, report):
    with pytest.raises(ValueError):
        emit_report(report, tmp_path, ["pdf"])


def test_detection_ratios_validated(report):
    bad = report.to_dict()
    bad["detection"]["Vehicle"]["ap"] = 1.5
    with pytest.raises(ValueError):
        type(report).from_dict(bad)
