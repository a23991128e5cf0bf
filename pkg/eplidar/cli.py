"""Command-line pipeline: simulate -> train-detector -> detect -> extract -> train-classifier -> evaluate -> report."""

import argparse
import itertools
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import torch
from tqdm import tqdm

from eplidar import __version__
from eplidar.config import PRESET_OVERRIDES, PipelineConfig, load_config
from eplidar.dataset import (
    SPLITS,
    DatasetManifest,
    DetectionRecord,
    load_scene_frames,
    read_detections,
    read_manifest,
    split_dataset,
    write_detections,
    write_manifest,
    write_scene,
)
from eplidar.detect import (
    DetectorConfig,
    DetectorTrainConfig,
    detect_frames,
    frames_from_manifest,
    load_detector,
    train_detector,
)
from eplidar.errors import EmptySplitError, EplidarError, MissingArtifactError
from eplidar.eval import REFERENCE_MATRIX, build_report, emit_report, published_reference_report, read_json, render_text, write_json
from eplidar.eval.metrics import confusion_from_labels, evaluate_detections
from eplidar.eval.report import FORMATS
from eplidar.geom import Category
from eplidar.pedcls import (
    ClassifierTrainConfig,
    ExtractionStats,
    PointNetConfig,
    VoxelMLPConfig,
    extract_frame_instances,
    load_classifier,
    predict_instances,
    read_instances,
    train_classifier,
    training_pool,
    write_instances,
)
from eplidar.sim import PRESETS, generate_scenarios, load_scenario_spec, render_scenario
from eplidar.utils import setup_logging

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.json"
DETECTOR_CHECKPOINT = "detector.epnn"
# frames handed to the detector at once
DETECT_CHUNK = 64


# ----------------------------- artifact lookup -----------------------------

def _manifest(config: PipelineConfig) -> DatasetManifest:
    return read_manifest(config.paths.data_root)


def _require(path: Path, what: str, producer: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(f"{what} ({path})", producer)
    return path


def _classifier_path(config: PipelineConfig, kind: str) -> Path:
    return Path(config.paths.checkpoints) / f"{kind}.epnn"


def _split_instances(config: PipelineConfig, split: str):
    directory = config.paths.instances_dir / split
    _require(directory / "instances.tsv", f"{split} instances", "extract")
    return read_instances(directory)


# ----------------------------- subcommands -----------------------------

def cmd_simulate(config: PipelineConfig, args: argparse.Namespace) -> int:
    if config.paths.scenario_spec:
        spec = load_scenario_spec(config.paths.scenario_spec)
    else:
        spec = PRESETS[config.run.preset]
    if config.seeds.scenario is not None:
        spec = replace(spec, seed=config.seeds.scenario)
    root = Path(config.paths.data_root)
    logger.info(f"Simulating {spec.scenes} scenes (seed {spec.seed}) into {root}")

    entries = []
    for scenario in generate_scenarios(spec):
        ids: List[Sequence[int]] = []
        points: List[int] = []

        def frames():
            rendered = render_scenario(scenario, threads=config.run.threads)
            for f in tqdm(rendered, total=scenario.frame_count, desc=scenario.scenario_id, leave=False):
                ids.append(f.box_actor_ids)
                points.append(len(f.cloud))
                yield f.cloud, f.boxes

        # write_scene asks for a frame's ids right after writing that frame
        object_ids = (ids[i] for i in itertools.count())
        entries.append(write_scene(root, scenario.scenario_id, frames(), seed=scenario.seed,
                                   duration=scenario.duration, object_ids=object_ids))
        mean_pts = float(np.mean(points)) if points else 0.0
        print(f"{scenario.scenario_id}\t{len(points)} frames\t{sum(points)} points\t{mean_pts:.0f} points/frame")

    manifest = DatasetManifest(root=root, scenes=tuple(entries))
    active = sum(1 for r in config.run.split_ratios if r > 0)
    if len(entries) < active:
        logger.warning(f"{len(entries)} scenes cannot fill {active} splits; assigning every scene to train")
        manifest = manifest.with_splits({e.scene_id: "train" for e in entries})
    else:
        manifest = split_dataset(manifest, config.run.split_ratios, seed=config.seeds.split)
    path = write_manifest(manifest)
    logger.info(f"Wrote {path}")
    return 0


def _detector_config(config: PipelineConfig) -> DetectorConfig:
    base = DetectorConfig()
    anchors = replace(base.anchors, score_threshold=config.thresholds.score, nms_iou_threshold=config.thresholds.nms_iou)
    d = config.detector
    return replace(base, voxel_size=d.voxel_size, num_keypoints=d.num_keypoints, pre_nms_top_k=d.pre_nms_top_k,
                   anchors=anchors, seed=config.seeds.detector)


def cmd_train_detector(config: PipelineConfig, args: argparse.Namespace) -> int:
    manifest = _manifest(config)
    d = config.detector
    frames = frames_from_manifest(manifest, "train", stride=d.frame_stride)
    if not frames:
        raise EmptySplitError("The train split holds no frames; check run.split_ratios")
    train_config = DetectorTrainConfig(epochs=d.epochs, max_lr=d.max_lr, momentum=d.momentum,
                                       warmup_fraction=d.warmup_fraction, frame_stride=d.frame_stride,
                                       seed=config.seeds.detector)
    _, history = train_detector(frames, _detector_config(config), train_config, config.paths.checkpoints)
    logger.info(f"Detector trained: final epoch loss {history.epoch_losses[-1]:.4f}, "
                f"{len(history.checkpoints)} checkpoints in {config.paths.checkpoints}")
    return 0


def cmd_detect(config: PipelineConfig, args: argparse.Namespace) -> int:
    manifest = _manifest(config)
    ckpt = _require(Path(config.paths.checkpoints) / DETECTOR_CHECKPOINT, "detector checkpoint", "train-detector")
    model = load_detector(ckpt)
    # thresholds come from the pipeline config, not from training time
    model.config.anchors = replace(model.config.anchors, score_threshold=config.thresholds.score,
                                   nms_iou_threshold=config.thresholds.nms_iou)
    out_dir = config.paths.detections_dir
    for entry in manifest.scenes:
        records: List[DetectionRecord] = []
        frames = load_scene_frames(manifest, entry.scene_id)
        with tqdm(total=entry.frame_count, desc=f"detect {entry.scene_id}", leave=False) as bar:
            while True:
                chunk = list(itertools.islice(frames, DETECT_CHUNK))
                if not chunk:
                    break
                results = detect_frames(model, [cloud for _, cloud, _ in chunk], threads=config.run.threads)
                for (frame_id, _, _), dets in zip(chunk, results):
                    records.extend(DetectionRecord(frame_id, k, d.box, d.score) for k, d in enumerate(dets))
                bar.update(len(chunk))
        write_detections(out_dir / f"{entry.scene_id}.tsv", records)
        logger.info(f"{entry.scene_id}: {len(records)} detections over {entry.frame_count} frames")
    return 0


def _scene_detections(config: PipelineConfig, scene_id: str) -> Dict[int, List[DetectionRecord]]:
    path = _require(config.paths.detections_dir / f"{scene_id}.tsv", f"detections for {scene_id}", "detect")
    by_frame: Dict[int, List[DetectionRecord]] = {}
    for r in read_detections(path):
        by_frame.setdefault(r.frame_id, []).append(r)
    return by_frame


def cmd_extract(config: PipelineConfig, args: argparse.Namespace) -> int:
    manifest = _manifest(config)
    source = config.run.extract_source
    for split in SPLITS:
        instances = []
        stats = ExtractionStats()
        for entry in manifest.scenes_in(split):
            dets = _scene_detections(config, entry.scene_id) if source == "detections" else {}
            for frame_id, cloud, anns in load_scene_frames(manifest, entry.scene_id):
                gt = [a.to_box() for a in anns]
                if source == "detections":
                    boxes = [r.box for r in dets.get(frame_id, [])]
                else:
                    boxes = [b for b in gt if b.category is Category.PEDESTRIAN]
                found, s = extract_frame_instances(
                    cloud, boxes, gt, entry.scene_id, frame_id, split,
                    n=config.classifier.num_points, seed=config.seeds.extract,
                    threshold=config.thresholds.extraction_iou,
                )
                instances.extend(found)
                stats.add(s)
        write_instances(config.paths.instances_dir / split, instances)
        logger.info(f"{split}: {stats.detections} pedestrian boxes, {stats.labeled} labeled, "
                    f"{stats.unlabeled} unmatched, {stats.empty} empty {dict(sorted(stats.per_label.items()))}")
    return 0


def cmd_train_classifier(config: PipelineConfig, args: argparse.Namespace) -> int:
    train = _split_instances(config, "train")
    val_dir = config.paths.instances_dir / "val"
    val = read_instances(val_dir) if (val_dir / "instances.tsv").exists() else []
    c = config.classifier
    train_config = ClassifierTrainConfig(
        epochs=c.epochs, batch_size=c.batch_size, max_lr=c.max_lr, momentum=c.momentum,
        warmup_fraction=c.warmup_fraction, patience=c.patience, regularizer_weight=c.regularizer_weight,
        activities=config.activity_filter, seed=config.seeds.classifier,
    )
    for kind in c.models:
        if kind == "pointnet":
            model_config = PointNetConfig(num_points=c.num_points, seed=config.seeds.classifier)
        else:
            model_config = VoxelMLPConfig(seed=config.seeds.classifier)
        _, history = train_classifier(train, val, kind, model_config, train_config,
                                      checkpoint_path=_classifier_path(config, kind))
        last_val = f", val acc {history.val_accuracy[-1]:.3f}" if history.val_accuracy else ""
        logger.info(f"{kind}: best epoch {history.best_epoch}, train acc {history.train_accuracy[-1]:.3f}{last_val}")
    return 0


def cmd_evaluate(config: PipelineConfig, args: argparse.Namespace) -> int:
    manifest = _manifest(config)
    checkpoints = {kind: _require(_classifier_path(config, kind), f"{kind} checkpoint", "train-classifier")
                   for kind in config.classifier.models}
    test_scenes = manifest.scenes_in("test")
    if not test_scenes:
        raise EmptySplitError("The test split holds no scenes; check run.split_ratios")

    pairs = []
    for entry in test_scenes:
        dets = _scene_detections(config, entry.scene_id)
        frames = range(0, entry.frame_count, config.run.eval_frame_stride)
        for frame_id, _, anns in load_scene_frames(manifest, entry.scene_id, frames):
            scored = [(r.box, r.score) for r in dets.get(frame_id, [])]
            pairs.append((scored, [a.to_box() for a in anns]))
    detection = [
        evaluate_detections(pairs, cat, config.thresholds.eval_iou, config.thresholds.score)
        for cat in (Category.PEDESTRIAN, Category.VEHICLE)
    ]

    test = training_pool(_split_instances(config, "test"), config.activity_filter)
    if not test:
        raise EmptySplitError("No labeled test instances to evaluate the classifiers on")
    y_true = [i.label.index for i in test]
    confusions = {}
    for kind, path in checkpoints.items():
        y_pred = predict_instances(load_classifier(path), test).argmax(axis=1)
        confusions[kind] = confusion_from_labels(y_true, y_pred)

    report = build_report(detection, confusions, config.to_dict())
    path = write_json(report, Path(config.paths.reports) / METRICS_FILE)
    for d in detection:
        logger.info(f"{d.category.value}: AP {d.ap:.3f} P {d.precision:.3f} R {d.recall:.3f} F1 {d.f1:.3f}")
    for kind, c in report.classifiers.items():
        logger.info(f"{kind}: accuracy {c.accuracy:.4f} on {c.confusion.total} instances")
    logger.info(f"Wrote {path}")
    return 0


def cmd_report(config: PipelineConfig, args: argparse.Namespace) -> int:
    reports = Path(config.paths.reports)
    if args.reference:
        report, prefix = published_reference_report(), "reference"
        logger.debug(f"Reference confusion matrix {REFERENCE_MATRIX.as_tuple()}")
    else:
        report = read_json(_require(reports / METRICS_FILE, "metrics report", "evaluate"))
        prefix = "report"
    emit_report(report, reports, args.formats or FORMATS, prefix=prefix)
    print(render_text(report))
    return 0


COMMANDS: Dict[str, Callable[[PipelineConfig, argparse.Namespace], int]] = {
    "simulate": cmd_simulate,
    "train-detector": cmd_train_detector,
    "detect": cmd_detect,
    "extract": cmd_extract,
    "train-classifier": cmd_train_classifier,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}

_HELP = {
    "simulate": "render every scenario and write frames, annotations and the manifest",
    "train-detector": "train the keypoint detector on the train split",
    "detect": "run the detector over every scene and dump detections",
    "extract": "crop pedestrian detections into labeled instances per split",
    "train-classifier": "train the PointNet and voxel MLP activity classifiers",
    "evaluate": "score detections and classifiers on the test split",
    "report": "render the metrics report as text, CSV and SVG",
}


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags sit before or after the subcommand without clobbering each other
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="pipeline INI file")
    p.add_argument("--seed", type=int, help="use this seed for every stage")
    p.add_argument("--threads", type=int, help="worker threads for frame-level stages")
    p.add_argument("--preset", choices=sorted(PRESET_OVERRIDES), help="scenario and training preset")
    p.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="stderr log level")
    return p


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = argparse.ArgumentParser(prog="eplidar", parents=[flags],
                                     description="Elevated-LiDAR pedestrian activity pipeline")
    parser.add_argument("--version", action="version", version=f"eplidar {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[flags], help=_HELP[name])
        if name == "report":
            p.add_argument("--reference", action="store_true", default=False,
                           help="render the published PointNet confusion matrix instead of metrics.json")
            p.add_argument("--format", dest="formats", action="append", choices=FORMATS, default=None,
                           help="output format (repeatable; default all)")
    return parser


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    config = load_config(getattr(args, "config", None), getattr(args, "preset", None))
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    if getattr(args, "threads", None) is not None:
        config = replace(config, run=replace(config.run, threads=args.threads))
    return config.validate()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(getattr(args, "log_level", "INFO"))
    try:
        config = resolve_config(args)
        torch.set_num_threads(1)
        logger.debug(f"Running {args.command} with preset {config.run.preset}, {config.run.threads} threads")
        return COMMANDS[args.command](config, args)
    except EplidarError as exc:
        logger.error(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
