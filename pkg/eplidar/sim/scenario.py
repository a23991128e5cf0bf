import configparser
import logging
import math
import re
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from eplidar.activity import ActivityClass
from eplidar.errors import PlacementError, ScenarioSpecError
from eplidar.geom import Category
from eplidar.utils import derive_seed, make_rng

from .actors import GAIT_PRESETS, Actor, Trajectory
from .mesh import METAL, WOOD, TriangleMesh, box_mesh, ground_plane
from .sensor import FULL_SCALE_SENSOR, SensorConfig

logger = logging.getLogger(__name__)

MAX_PLACEMENT_RETRIES = 200
SPAWN_CLEARANCE = 0.3
TRAJECTORY_MARGIN = 1.0


@dataclass(frozen=True)
class ScenarioSpec:
    scenes: int = 1
    duration: float = 10.0
    seed: int = 0
    # x_min, x_max, y_min, y_max of the walkable area, sensor frame
    bounds: Tuple[float, float, float, float] = (5.0, 20.0, -7.0, 7.0)
    pedestrians: int = 6
    vehicles: int = 1
    street_furniture: int = 2
    vehicle_speed: float = 3.0
    vehicle_extents: Tuple[float, float, float] = (3.0, 1.6, 1.5)
    # duration is drawn per scene from [duration, duration_max] when duration_max is larger
    duration_max: Optional[float] = None
    activity_mix: Dict[ActivityClass, float] = field(
        default_factory=lambda: {a: 1.0 for a in ActivityClass}
    )
    sensor: SensorConfig = field(default_factory=SensorConfig)

    def __post_init__(self):
        if self.scenes < 0 or self.pedestrians < 0 or self.vehicles < 0 or self.street_furniture < 0:
            raise ValueError("Scenario counts must be >= 0")
        if self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if any(w < 0 for w in self.activity_mix.values()) or sum(self.activity_mix.values()) <= 0:
            raise ValueError("activity_mix weights must be >= 0 with a positive sum")
        x0, x1, y0, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"Invalid bounds {self.bounds}")


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    static_meshes: Tuple[TriangleMesh, ...]
    actors: Tuple[Actor, ...]
    duration: float
    sensor: SensorConfig
    seed: int
    bounds: Tuple[float, float, float, float]

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"Scenario duration must be positive, got {self.duration}")
        for actor in self.actors:
            if actor.trajectory.start_time < 0 or actor.trajectory.end_time > self.duration + 1e-9:
                raise ValueError(f"Actor {actor.actor_id} trajectory exceeds the scenario duration")

    @property
    def frame_count(self) -> int:
        return int(math.floor(self.duration * self.sensor.frame_rate + 1e-9))

    def in_bounds(self, x: float, y: float) -> bool:
        x0, x1, y0, y1 = self.bounds
        return x0 <= x <= x1 and y0 <= y <= y1


SMOKE_SPEC = ScenarioSpec(scenes=2, duration=10.0, seed=7, pedestrians=6, vehicles=1, street_furniture=2)
FULL_SCALE_SPEC = ScenarioSpec(
    scenes=21, duration=55.0, duration_max=250.0, seed=2024, pedestrians=12, vehicles=3,
    street_furniture=4, sensor=FULL_SCALE_SENSOR,
)
PRESETS = {"smoke": SMOKE_SPEC, "paper-scale": FULL_SCALE_SPEC}


# ----------------------------- spec file -----------------------------

_SECTION_KEYS = {
    "scenario": {"scenes", "duration", "duration_max", "seed", "bounds"},
    "actors": {"pedestrians", "vehicles", "street_furniture", "vehicle_speed", "vehicle_extents"},
    "activity_mix": set(),
    "sensor": {f.name for f in fields(SensorConfig)},
}
_ANGLE_KEYS = {"pitch_down", "azimuth_fov", "elevation_span", "yaw"}


def _line_of(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[(.+)\]$", line)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return number
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*[=:]", line, re.I):
            return number
    return None


def _parse_value(raw: str, kind):
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is int:
        return int(raw.strip())
    if kind is float:
        return float(raw.strip())
    if kind is tuple:
        return tuple(float(v) for v in raw.split(","))
    raise TypeError(kind)


def parse_scenario_spec(text: str, path: str = "<spec>") -> ScenarioSpec:
    """Parse the ``[section]`` / ``key = value`` scenario-spec format.

    Angles in ``[sensor]`` are given in degrees. Errors carry the offending line number.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ScenarioSpecError(f"malformed line {e.errors[0][1] if e.errors else ''}", lineno, path) from e
    except configparser.DuplicateOptionError as e:
        raise ScenarioSpecError(f"duplicate key '{e.option}' in [{e.section}]", e.lineno, path) from e
    except configparser.DuplicateSectionError as e:
        raise ScenarioSpecError(f"duplicate section [{e.section}]", e.lineno, path) from e
    except configparser.MissingSectionHeaderError as e:
        raise ScenarioSpecError("key = value line before any [section] header", e.lineno, path) from e

    top: Dict[str, object] = {}
    sensor_kwargs: Dict[str, object] = {}
    mix: Dict[ActivityClass, float] = {}
    sensor_types = {f.name: f.type for f in fields(SensorConfig)}
    spec_types = {f.name: f.type for f in fields(ScenarioSpec)}

    for section in parser.sections():
        sec = section.lower()
        if sec not in _SECTION_KEYS:
            raise ScenarioSpecError(f"unknown section [{section}]", _line_of(text, sec), path)
        for key, raw in parser.items(section):
            lineno = _line_of(text, sec, key)
            if sec != "activity_mix" and key not in _SECTION_KEYS[sec]:
                raise ScenarioSpecError(f"unknown key '{key}' in [{section}]", lineno, path)
            try:
                if sec == "activity_mix":
                    mix[ActivityClass.from_name(key)] = _parse_value(raw, float)
                elif sec == "sensor":
                    kind = _field_kind(sensor_types[key])
                    value = _parse_value(raw, kind)
                    if key in _ANGLE_KEYS:
                        value = math.radians(value)
                    sensor_kwargs[key] = value
                else:
                    top[key] = _parse_value(raw, _field_kind(spec_types[key]))
            except ValueError as e:
                raise ScenarioSpecError(f"bad value for '{key}': {e}", lineno, path) from e

    try:
        if mix:
            full = {a: 0.0 for a in ActivityClass}
            full.update(mix)
            top["activity_mix"] = full
        if sensor_kwargs:
            top["sensor"] = SensorConfig(**sensor_kwargs)
        return ScenarioSpec(**top)
    except ValueError as e:
        raise ScenarioSpecError(str(e), None, path) from e


def _field_kind(annotation) -> type:
    text = str(annotation)
    if "Tuple" in text or "tuple" in text:
        return tuple
    if "bool" in text:
        return bool
    if "int" in text and "float" not in text:
        return int
    return float


def load_scenario_spec(path: str) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as f:
        return parse_scenario_spec(f.read(), path=str(path))


# ----------------------------- generation -----------------------------

def _bouncing_path(start: np.ndarray, heading: float, speed: float, t0: float, t1: float,
                   bounds: Tuple[float, float, float, float]) -> List[List[float]]:
    """Straight walk that reflects off the bounds; rows (t, x, y, heading)."""
    x0, x1, y0, y1 = bounds
    pos = np.array(start, dtype=np.float64)
    rows = [[t0, pos[0], pos[1], heading]]
    t = t0
    if speed <= 0.0:
        if t1 > t0:
            rows.append([t1, pos[0], pos[1], heading])
        return rows
    for _ in range(10000):
        vx, vy = speed * math.cos(heading), speed * math.sin(heading)
        hits = []
        if vx > 1e-12:
            hits.append(((x1 - pos[0]) / vx, "x"))
        elif vx < -1e-12:
            hits.append(((x0 - pos[0]) / vx, "x"))
        if vy > 1e-12:
            hits.append(((y1 - pos[1]) / vy, "y"))
        elif vy < -1e-12:
            hits.append(((y0 - pos[1]) / vy, "y"))
        dt, axis = min(hits) if hits else (math.inf, "")
        dt = max(dt, 0.0)
        if t + dt >= t1:
            pos = pos + (t1 - t) * np.array([vx, vy])
            rows.append([t1, float(np.clip(pos[0], x0, x1)), float(np.clip(pos[1], y0, y1)), heading])
            return rows
        pos = pos + dt * np.array([vx, vy])
        t += dt
        heading = math.atan2(vy, -vx) if axis == "x" else math.atan2(-vy, vx)
        heading %= 2.0 * math.pi
        if dt > 1e-9:
            rows.append([t, float(pos[0]), float(pos[1]), heading])
        else:
            rows[-1][3] = heading
    raise PlacementError("Trajectory generation did not terminate")


def _spawn_footprint(kind: Category, spec: ScenarioSpec) -> float:
    """Radius of the clearance disc used for non-overlapping spawns."""
    if kind is Category.VEHICLE:
        w, h, _ = spec.vehicle_extents
        return 0.5 * math.hypot(w, h) + SPAWN_CLEARANCE
    return 0.5 + SPAWN_CLEARANCE


def _place(rng: np.random.Generator, radius: float, placed: List[Tuple[np.ndarray, float]],
           bounds: Tuple[float, float, float, float], what: str) -> np.ndarray:
    x0, x1, y0, y1 = bounds
    for _ in range(MAX_PLACEMENT_RETRIES):
        p = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
        if all(np.linalg.norm(p - q) >= radius + r for q, r in placed):
            placed.append((p, radius))
            return p
    raise PlacementError(f"Could not place {what} without overlap after {MAX_PLACEMENT_RETRIES} attempts")


def _inner_bounds(bounds, margin: float):
    x0, x1, y0, y1 = bounds
    if x1 - x0 <= 2 * margin or y1 - y0 <= 2 * margin:
        raise PlacementError(f"Bounds {bounds} too small for a {margin} m margin")
    return (x0 + margin, x1 - margin, y0 + margin, y1 - margin)


def _street_furniture(rng: np.random.Generator, count: int, bounds) -> List[TriangleMesh]:
    x0, x1, y0, y1 = bounds
    meshes = []
    for i in range(count):
        side = 1.0 if i % 2 == 0 else -1.0
        x = float(rng.uniform(x0, x1))
        y = (y1 + 1.0) if side > 0 else (y0 - 1.0)
        if i % 4 in (0, 1):
            meshes.append(box_mesh((0.2, 0.2, 4.0), METAL, center=(x, y, 2.0)))
        else:
            meshes.append(box_mesh((1.6, 0.5, 0.5), WOOD, center=(x, y, 0.25)))
    return meshes


def generate_scenario(spec: ScenarioSpec, seed: int, scenario_id: str = "scene_000") -> Scenario:
    """Seeded scene: ground, street furniture, pedestrians and vehicles on bouncing paths."""
    rng = make_rng(seed, 0x5CE7E)
    if spec.duration_max is not None and spec.duration_max > spec.duration:
        duration = float(rng.uniform(spec.duration, spec.duration_max))
        duration = math.floor(duration * spec.sensor.frame_rate) / spec.sensor.frame_rate
    else:
        duration = float(spec.duration)

    statics = [ground_plane()] + _street_furniture(rng, spec.street_furniture, spec.bounds)
    path_bounds = _inner_bounds(spec.bounds, TRAJECTORY_MARGIN)
    activities = [a for a in ActivityClass]
    weights = np.array([spec.activity_mix.get(a, 0.0) for a in activities], dtype=np.float64)
    weights = weights / weights.sum()

    placed: List[Tuple[np.ndarray, float]] = []
    actors: List[Actor] = []
    for i in range(spec.vehicles):
        start = _place(rng, _spawn_footprint(Category.VEHICLE, spec), placed, path_bounds, f"vehicle {i}")
        heading = float(rng.uniform(0.0, 2.0 * math.pi))
        rows = _bouncing_path(start, heading, spec.vehicle_speed, 0.0, duration, path_bounds)
        actors.append(Actor.vehicle(len(actors), Trajectory(np.array(rows)), extents=spec.vehicle_extents))
    for i in range(spec.pedestrians):
        start = _place(rng, _spawn_footprint(Category.PEDESTRIAN, spec), placed, path_bounds, f"pedestrian {i}")
        activity = activities[int(rng.choice(len(activities), p=weights))]
        heading = float(rng.uniform(0.0, 2.0 * math.pi))
        gait = GAIT_PRESETS[activity]
        if activity is ActivityClass.FALLING:
            fall_start = float(rng.uniform(0.2, 0.6)) * duration
            gait = replace(gait, fall_start=fall_start)
            rows = _bouncing_path(start, heading, gait.speed, 0.0, fall_start, path_bounds)
            last = rows[-1]
            rows.append([duration, last[1], last[2], last[3]])
        else:
            rows = _bouncing_path(start, heading, gait.speed, 0.0, duration, path_bounds)
        actors.append(Actor.pedestrian(len(actors), activity, Trajectory(np.array(rows)), gait=gait))

    logger.debug(f"Generated {scenario_id}: {spec.pedestrians} pedestrians, {spec.vehicles} vehicles, "
                 f"{duration:.1f} s")
    return Scenario(
        scenario_id=scenario_id,
        static_meshes=tuple(statics),
        actors=tuple(actors),
        duration=duration,
        sensor=spec.sensor,
        seed=int(seed),
        bounds=spec.bounds,
    )


def generate_scenarios(spec: ScenarioSpec) -> List[Scenario]:
    return [
        generate_scenario(spec, derive_seed(spec.seed, i), scenario_id=f"scene_{i:03d}")
        for i in range(spec.scenes)
    ]
