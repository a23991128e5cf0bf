from .mesh import (
    ASPHALT,
    CAR_PAINT,
    CLOTHING,
    METAL,
    WOOD,
    Material,
    TriangleMesh,
    box_mesh,
    capsule_mesh,
    ground_plane,
    icosphere_mesh,
)
from .raycast import RayHit, cast_ray, cast_rays
from .sensor import FULL_SCALE_SENSOR, SensorConfig, intensity, ray_grid
from .actors import GAIT_PRESETS, Actor, BodyDims, BodyPart, GaitParams, Trajectory
from .gait import actor_box, actor_frame, fall_progress, limb_pose, pose_actor
from .scenario import (
    PRESETS,
    Scenario,
    ScenarioSpec,
    generate_scenario,
    generate_scenarios,
    load_scenario_spec,
    parse_scenario_spec,
)
from .render import RenderedFrame, render_frame, render_frame_detailed, render_scenario

__all__ = [
    "ASPHALT",
    "CAR_PAINT",
    "CLOTHING",
    "METAL",
    "WOOD",
    "Material",
    "TriangleMesh",
    "box_mesh",
    "capsule_mesh",
    "ground_plane",
    "icosphere_mesh",
    "RayHit",
    "cast_ray",
    "cast_rays",
    "FULL_SCALE_SENSOR",
    "SensorConfig",
    "intensity",
    "ray_grid",
    "GAIT_PRESETS",
    "Actor",
    "BodyDims",
    "BodyPart",
    "GaitParams",
    "Trajectory",
    "actor_box",
    "actor_frame",
    "fall_progress",
    "limb_pose",
    "pose_actor",
    "PRESETS",
    "Scenario",
    "ScenarioSpec",
    "generate_scenario",
    "generate_scenarios",
    "load_scenario_spec",
    "parse_scenario_spec",
    "RenderedFrame",
    "render_frame",
    "render_frame_detailed",
    "render_scenario",
]
