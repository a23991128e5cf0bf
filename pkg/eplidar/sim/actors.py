import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from eplidar.activity import ActivityClass
from eplidar.errors import TimeOutOfRange
from eplidar.geom import Category

from .mesh import CAR_PAINT, CLOTHING, Material


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear path; rows of (t seconds, x, y, heading).

    Position is interpolated linearly; heading is that of the segment's first waypoint.
    """

    waypoints: np.ndarray

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=np.float64).reshape(-1, 4)
        if wp.shape[0] < 1:
            raise ValueError("Trajectory needs at least one waypoint")
        if wp.shape[0] > 1 and np.any(np.diff(wp[:, 0]) <= 0):
            raise ValueError("Trajectory timestamps must be strictly increasing")
        wp.setflags(write=False)
        object.__setattr__(self, "waypoints", wp)

    @property
    def start_time(self) -> float:
        return float(self.waypoints[0, 0])

    @property
    def end_time(self) -> float:
        return float(self.waypoints[-1, 0])

    def state_at(self, t: float) -> Tuple[float, float, float]:
        if not self.start_time <= t <= self.end_time:
            raise TimeOutOfRange(f"t={t} outside trajectory [{self.start_time}, {self.end_time}]")
        wp = self.waypoints
        if wp.shape[0] == 1:
            return float(wp[0, 1]), float(wp[0, 2]), float(wp[0, 3])
        seg = int(np.searchsorted(wp[:, 0], t, side="right")) - 1
        seg = min(max(seg, 0), wp.shape[0] - 2)
        t0, t1 = wp[seg, 0], wp[seg + 1, 0]
        a = (t - t0) / (t1 - t0)
        x = wp[seg, 1] + a * (wp[seg + 1, 1] - wp[seg, 1])
        y = wp[seg, 2] + a * (wp[seg + 1, 2] - wp[seg, 2])
        return float(x), float(y), float(wp[seg, 3])


@dataclass(frozen=True)
class GaitParams:
    speed: float
    swing_amplitude: float  # radians, leg swing about the hip
    frequency: float  # Hz, full swing cycles per second
    arm_swing_ratio: float = 0.6
    phone_arm: bool = False
    weave_amplitude: float = 0.0
    weave_period: float = 3.0
    fall_start: Optional[float] = None
    fall_duration: float = 1.0
    injured_leg_factor: float = 1.0  # swing scale of the left leg
    torso_dip: float = 0.0

    @property
    def period(self) -> float:
        return 1.0 / self.frequency


GAIT_PRESETS: Dict[ActivityClass, GaitParams] = {
    ActivityClass.WALKING: GaitParams(speed=1.4, swing_amplitude=math.radians(30.0), frequency=2.0),
    ActivityClass.RUNNING: GaitParams(speed=3.5, swing_amplitude=math.radians(45.0), frequency=3.0),
    ActivityClass.TALKING_ON_PHONE: GaitParams(
        speed=1.0, swing_amplitude=math.radians(30.0), frequency=2.0, phone_arm=True
    ),
    ActivityClass.DIZZY_WALKING: GaitParams(
        speed=1.0, swing_amplitude=math.radians(30.0), frequency=2.0, weave_amplitude=0.5, weave_period=3.0
    ),
    ActivityClass.FALLING: GaitParams(speed=1.4, swing_amplitude=math.radians(30.0), frequency=2.0),
    ActivityClass.INJURED_LEG_WALKING: GaitParams(
        speed=0.8, swing_amplitude=math.radians(30.0), frequency=2.0, injured_leg_factor=0.3, torso_dip=0.05
    ),
}


@dataclass(frozen=True)
class BodyDims:
    hip_height: float = 0.92
    hip_half_width: float = 0.10
    leg_length: float = 0.85
    leg_radius: float = 0.07
    torso_bottom: float = 0.95
    torso_top: float = 1.45
    torso_radius: float = 0.16
    shoulder_height: float = 1.42
    shoulder_half_width: float = 0.22
    arm_length: float = 0.60
    arm_radius: float = 0.05
    head_center: float = 1.60
    head_half_length: float = 0.02
    head_radius: float = 0.11


@dataclass(frozen=True)
class BodyPart:
    name: str
    start: np.ndarray
    end: np.ndarray
    radius: float

    @property
    def axis(self) -> np.ndarray:
        return self.end - self.start


@dataclass(frozen=True)
class Actor:
    actor_id: int
    kind: Category
    trajectory: Trajectory
    activity: Optional[ActivityClass] = None
    gait: Optional[GaitParams] = None
    body: BodyDims = field(default_factory=BodyDims)
    vehicle_extents: Tuple[float, float, float] = (3.0, 1.6, 1.5)
    material: Material = CLOTHING

    def __post_init__(self):
        is_ped = self.kind is Category.PEDESTRIAN
        if is_ped != (self.activity is not None):
            raise ValueError("activity must be set exactly for pedestrian actors")
        if is_ped and self.gait is None:
            object.__setattr__(self, "gait", GAIT_PRESETS[self.activity])

    @classmethod
    def pedestrian(cls, actor_id: int, activity: ActivityClass, trajectory: Trajectory,
                   gait: Optional[GaitParams] = None, material: Material = CLOTHING) -> "Actor":
        return cls(actor_id, Category.PEDESTRIAN, trajectory, activity=activity,
                   gait=gait or GAIT_PRESETS[activity], material=material)

    @classmethod
    def vehicle(cls, actor_id: int, trajectory: Trajectory, extents=(3.0, 1.6, 1.5),
                material: Material = CAR_PAINT) -> "Actor":
        return cls(actor_id, Category.VEHICLE, trajectory, vehicle_extents=tuple(extents), material=material)

    def with_gait(self, **changes) -> "Actor":
        return replace(self, gait=replace(self.gait, **changes))
