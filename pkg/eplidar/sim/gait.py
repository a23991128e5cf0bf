"""Activity-specific kinematics for capsule-bodied pedestrians."""

import math
from typing import List, Sequence, Tuple

import numpy as np

from eplidar.activity import ActivityClass
from eplidar.errors import TimeOutOfRange
from eplidar.geom import Category, OrientedBox

from .actors import Actor, BodyPart
from .mesh import TriangleMesh, box_mesh, capsule_mesh, pose_matrix

CAPSULE_COUNT = (8, 8)


def fall_progress(actor: Actor, t: float) -> float:
    """Eased 0..1 progress of the fall (0 before onset, 1 once prone)."""
    g = actor.gait
    if actor.activity is not ActivityClass.FALLING or g.fall_start is None or t <= g.fall_start:
        return 0.0
    s = min(1.0, (t - g.fall_start) / g.fall_duration)
    return 0.5 - 0.5 * math.cos(math.pi * s)


def _rotate_forward(p: np.ndarray, psi: float) -> np.ndarray:
    # pitch about the body y axis through the feet; the top moves towards +x
    c, s = math.cos(psi), math.sin(psi)
    return np.array([p[0] * c + p[2] * s, p[1], -p[0] * s + p[2] * c])


def limb_pose(actor: Actor, t: float) -> List[BodyPart]:
    """Body-frame capsules (x forward, y left, z up, origin on the ground between the feet)."""
    if actor.kind is not Category.PEDESTRIAN:
        raise ValueError("limb_pose is defined for pedestrians only")
    g, b = actor.gait, actor.body
    fall = fall_progress(actor, t)
    t_phase = t if g.fall_start is None or actor.activity is not ActivityClass.FALLING else min(t, g.fall_start)
    phase = 2.0 * math.pi * g.frequency * t_phase
    swing = g.swing_amplitude * math.sin(phase) * (1.0 - fall)
    left_leg, right_leg = swing * g.injured_leg_factor, -swing
    dip = g.torso_dip * abs(math.sin(phase))

    def leg(side: float, angle: float) -> BodyPart:
        hip = np.array([0.0, side * b.hip_half_width, b.hip_height])
        foot = hip + b.leg_length * np.array([math.sin(angle), 0.0, -math.cos(angle)])
        return BodyPart("left_leg" if side > 0 else "right_leg", hip, foot, b.leg_radius)

    def arm(side: float, angle: float) -> BodyPart:
        shoulder = np.array([0.0, side * b.shoulder_half_width, b.shoulder_height - dip])
        hand = shoulder + b.arm_length * np.array([math.sin(angle), 0.0, -math.cos(angle)])
        return BodyPart("left_arm" if side > 0 else "right_arm", shoulder, hand, b.arm_radius)

    parts = [
        leg(1.0, left_leg),
        leg(-1.0, right_leg),
        BodyPart("torso", np.array([0.0, 0.0, b.torso_bottom - dip]), np.array([0.0, 0.0, b.torso_top - dip]),
                 b.torso_radius),
        BodyPart("head", np.array([0.0, 0.0, b.head_center - b.head_half_length - dip]),
                 np.array([0.0, 0.0, b.head_center + b.head_half_length - dip]), b.head_radius),
        arm(1.0, -left_leg * g.arm_swing_ratio),
    ]
    if g.phone_arm:
        shoulder = np.array([0.0, -b.shoulder_half_width, b.shoulder_height - dip])
        hand = np.array([0.08, -(b.head_radius + b.arm_radius + 0.02), b.head_center - dip])
        parts.append(BodyPart("right_arm", shoulder, hand, b.arm_radius))
    else:
        parts.append(arm(-1.0, -right_leg * g.arm_swing_ratio))

    if fall > 0.0:
        psi = 0.5 * math.pi * fall
        parts = [BodyPart(p.name, _rotate_forward(p.start, psi), _rotate_forward(p.end, psi), p.radius)
                 for p in parts]
        lowest = min(min(p.start[2], p.end[2]) - p.radius for p in parts)
        if lowest < 0.0:
            lift = np.array([0.0, 0.0, -lowest])
            parts = [BodyPart(p.name, p.start + lift, p.end + lift, p.radius) for p in parts]
    return parts


def actor_frame(actor: Actor, t: float) -> Tuple[float, float, float]:
    """World (x, y, heading) of the actor's body frame, lateral weave included."""
    x, y, heading = actor.trajectory.state_at(t)
    if actor.gait is not None and actor.gait.weave_amplitude > 0.0:
        offset = actor.gait.weave_amplitude * math.sin(2.0 * math.pi * t / actor.gait.weave_period)
        x -= offset * math.sin(heading)
        y += offset * math.cos(heading)
    return x, y, heading


def pose_actor(actor: Actor, t: float, duration: float = None) -> List[TriangleMesh]:
    """Tessellated, world-placed body of the actor at time t."""
    if duration is not None and not 0.0 <= t <= duration:
        raise TimeOutOfRange(f"t={t} outside scenario duration [0, {duration}]")
    x, y, heading = actor_frame(actor, t)
    if actor.kind is Category.VEHICLE:
        ext = actor.vehicle_extents
        return [box_mesh(ext, actor.material, center=(x, y, ext[2] / 2.0), heading=heading)]
    world = pose_matrix(x, y, 0.0, heading)
    return [
        capsule_mesh(p.start, p.end, p.radius, actor.material, CAPSULE_COUNT).transformed(world)
        for p in limb_pose(actor, t)
    ]


def tight_box(meshes: Sequence[TriangleMesh], x: float, y: float, heading: float, actor: Actor) -> OrientedBox:
    """Axis-aligned box in the heading frame around every posed vertex."""
    verts = np.vstack([m.vertices for m in meshes])
    c, s = math.cos(heading), math.sin(heading)
    dx, dy = verts[:, 0] - x, verts[:, 1] - y
    local = np.stack([c * dx + s * dy, -s * dx + c * dy, verts[:, 2]], axis=1)
    lo, hi = local.min(axis=0), local.max(axis=0)
    mid = 0.5 * (lo + hi)
    ext = hi - lo
    return OrientedBox(
        cx=x + c * mid[0] - s * mid[1],
        cy=y + s * mid[0] + c * mid[1],
        cz=float(mid[2]),
        w=float(ext[0]), h=float(ext[1]), l=float(ext[2]),
        heading=heading,
        category=actor.kind,
        activity=actor.activity,
    )


def actor_box(actor: Actor, t: float) -> OrientedBox:
    x, y, heading = actor_frame(actor, t)
    return tight_box(pose_actor(actor, t), x, y, heading, actor)
