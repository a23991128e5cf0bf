"""Pipeline configuration: INI file, .env path overrides, presets."""

import configparser
import logging
import os
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from dotenv import load_dotenv

from eplidar.activity import ActivityClass
from eplidar.errors import ConfigError

logger = logging.getLogger(__name__)

ENV_DATA_ROOT = "EPLIDAR_DATA_ROOT"
ENV_CHECKPOINTS = "EPLIDAR_CHECKPOINTS"
ENV_REPORTS = "EPLIDAR_REPORTS"


@dataclass
class PathsConfig:
    data_root: str = "data"
    checkpoints: str = "checkpoints"
    reports: str = "reports"
    # detection dumps and instance dumps live under the dataset root unless set
    detections: Optional[str] = None
    instances: Optional[str] = None
    scenario_spec: Optional[str] = None

    @property
    def detections_dir(self) -> Path:
        return Path(self.detections) if self.detections else Path(self.data_root) / "detections"

    @property
    def instances_dir(self) -> Path:
        return Path(self.instances) if self.instances else Path(self.data_root) / "instances"


@dataclass
class SeedsConfig:
    # None keeps the seed written in the scenario spec
    scenario: Optional[int] = None
    split: int = 0
    detector: int = 0
    extract: int = 0
    classifier: int = 0


@dataclass
class DetectorSection:
    epochs: int = 5
    frame_stride: int = 2
    num_keypoints: int = 2048
    voxel_size: float = 0.2
    max_lr: float = 0.01
    momentum: float = 0.9
    warmup_fraction: float = 0.3
    pre_nms_top_k: int = 512


@dataclass
class ClassifierSection:
    models: Tuple[str, ...] = ("pointnet", "voxel_mlp")
    epochs: int = 60
    batch_size: int = 32
    patience: int = 10
    num_points: int = 256
    max_lr: float = 0.01
    momentum: float = 0.9
    warmup_fraction: float = 0.3
    regularizer_weight: float = 0.001
    activities: Optional[Tuple[str, ...]] = None


@dataclass
class ThresholdsConfig:
    extraction_iou: float = 0.65
    eval_iou: float = 0.5
    nms_iou: float = 0.2
    score: float = 0.5


@dataclass
class RunConfig:
    preset: str = "smoke"
    threads: int = 1
    split_ratios: Tuple[float, ...] = (0.5, 0.0, 0.5)
    extract_source: str = "detections"
    eval_frame_stride: int = 1


@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    seeds: SeedsConfig = field(default_factory=SeedsConfig)
    detector: DetectorSection = field(default_factory=DetectorSection)
    classifier: ClassifierSection = field(default_factory=ClassifierSection)
    thresholds: ThresholdsConfig = field(default_factory=ThresholdsConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self) -> "PipelineConfig":
        for f in fields(ThresholdsConfig):
            v = getattr(self.thresholds, f.name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"thresholds.{f.name} must be in [0, 1], got {v}")
        if self.run.preset not in PRESET_OVERRIDES:
            raise ConfigError(f"run.preset must be one of {sorted(PRESET_OVERRIDES)}, got {self.run.preset!r}")
        if self.run.extract_source not in ("detections", "ground_truth"):
            raise ConfigError(f"run.extract_source must be 'detections' or 'ground_truth', got {self.run.extract_source!r}")
        if self.run.threads < 1:
            raise ConfigError(f"run.threads must be >= 1, got {self.run.threads}")
        for m in self.classifier.models:
            if m not in ("pointnet", "voxel_mlp"):
                raise ConfigError(f"classifier.models entries must be pointnet or voxel_mlp, got {m!r}")
        for a in self.classifier.activities or ():
            try:
                ActivityClass.from_name(a)
            except ValueError as exc:
                raise ConfigError(f"classifier.activities: {exc}") from None
        return self

    @property
    def activity_filter(self) -> Optional[Tuple[ActivityClass, ...]]:
        if not self.classifier.activities:
            return None
        return tuple(ActivityClass.from_name(a) for a in self.classifier.activities)

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Use one seed for every stage."""
        seeds = SeedsConfig(scenario=seed, split=seed, detector=seed, extract=seed, classifier=seed)
        return replace(self, seeds=seeds)

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: dict(vars(getattr(self, f.name))) for f in fields(self)}


PRESET_OVERRIDES: Dict[str, Dict[str, Dict[str, Any]]] = {
    "smoke": {},
    "paper-scale": {
        "detector": {"epochs": 20, "frame_stride": 5, "num_keypoints": 4096},
        "classifier": {"epochs": 100},
        "run": {"split_ratios": (0.6, 0.2, 0.2)},
    },
}

_SECTIONS = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(raw: str, annotation, where: str):
    origin = typing.get_origin(annotation)
    args = typing.get_args(annotation)
    if origin is typing.Union and type(None) in args:
        if raw.strip().lower() in ("", "none"):
            return None
        annotation = next(a for a in args if a is not type(None))
        origin, args = typing.get_origin(annotation), typing.get_args(annotation)
    if origin in (tuple, Tuple):
        item = args[0] if args else str
        return tuple(_coerce(p.strip(), item, where) for p in raw.split(",") if p.strip())
    try:
        if annotation is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if annotation is int:
            return int(raw)
        if annotation is float:
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r} as {getattr(annotation, '__name__', annotation)}") from None


def _line_of(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    """Line of ``key`` in ``section``, or of the section header when no key is given."""
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return n
        elif key is not None and current == section and s.split("=", 1)[0].strip().lower() == key:
            return n
    return None


def apply_overrides(config: PipelineConfig, overrides: Dict[str, Dict[str, Any]]) -> PipelineConfig:
    changes = {name: replace(getattr(config, name), **values) for name, values in overrides.items()}
    return replace(config, **changes)


def parse_pipeline_config(text: str, path: str = "<config>", base: Optional[PipelineConfig] = None) -> PipelineConfig:
    cfg = configparser.ConfigParser(interpolation=None)
    try:
        cfg.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(str(exc), path=path) from None
    config = base or PipelineConfig()
    overrides: Dict[str, Dict[str, Any]] = {}
    for section in cfg.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]", line_number=_line_of(text, section), path=path)
        hints = typing.get_type_hints(_SECTIONS[section])
        for key, raw in cfg[section].items():
            if key not in hints:
                raise ConfigError(f"unknown key '{key}' in [{section}]", line_number=_line_of(text, section, key), path=path)
            where = f"{path}:{_line_of(text, section, key)}"
            overrides.setdefault(section, {})[key] = _coerce(raw, hints[key], where)
    return apply_overrides(config, overrides)


def load_config(path: Optional[str] = None, preset: Optional[str] = None) -> PipelineConfig:
    """Defaults <- preset <- INI file <- environment (.env included)."""
    load_dotenv()
    config = PipelineConfig()
    text = None
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        text = p.read_text(encoding="utf-8")
        # the file may pick the preset, so read it once for that
        config = parse_pipeline_config(text, str(p), config)
    chosen = preset or config.run.preset
    if chosen not in PRESET_OVERRIDES:
        raise ConfigError(f"Unknown preset {chosen!r}. Expected one of {sorted(PRESET_OVERRIDES)}")
    config = apply_overrides(PipelineConfig(), PRESET_OVERRIDES[chosen])
    config = replace(config, run=replace(config.run, preset=chosen))
    if text is not None:
        config = parse_pipeline_config(text, str(path), config)
        if preset is not None:
            config = replace(config, run=replace(config.run, preset=preset))

    env = {
        "data_root": os.getenv(ENV_DATA_ROOT),
        "checkpoints": os.getenv(ENV_CHECKPOINTS),
        "reports": os.getenv(ENV_REPORTS),
    }
    env = {k: v for k, v in env.items() if v}
    if env:
        logger.debug(f"Path overrides from environment: {env}")
        config = replace(config, paths=replace(config.paths, **env))
    return config.validate()
