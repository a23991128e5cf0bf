import math
from dataclasses import replace

import numpy as np
import pytest

from eplidar.activity import ActivityClass
from eplidar.errors import TimeOutOfRange
from eplidar.geom import Category
from eplidar.sim import GAIT_PRESETS, Actor, Trajectory, actor_box, actor_frame, fall_progress, limb_pose, pose_actor


def _walker(activity=ActivityClass.WALKING, gait=None):
    traj = Trajectory(np.array([[0.0, 10.0, 0.0, 0.0], [10.0, 24.0, 0.0, 0.0]]))
    return Actor.pedestrian(1, activity, traj, gait=gait)


def test_trajectory_interpolates_linearly():
    traj = Trajectory(np.array([[0.0, 0.0, 0.0, 0.5], [2.0, 4.0, 2.0, 1.0]]))
    assert traj.state_at(1.0) == pytest.approx((2.0, 1.0, 0.5))
    assert traj.state_at(2.0) == pytest.approx((4.0, 2.0, 0.5))


def test_trajectory_rejects_out_of_range_time():
    traj = Trajectory(np.array([[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]]))
    with pytest.raises(TimeOutOfRange):
        traj.state_at(1.5)


def test_trajectory_requires_increasing_times():
    with pytest.raises(ValueError):
        Trajectory(np.array([[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]]))


def test_walking_legs_swing_in_antiphase():
    actor = _walker()
    quarter = 0.25 / GAIT_PRESETS[ActivityClass.WALKING].frequency
    parts = {p.name: p for p in limb_pose(actor, quarter)}
    left_x = parts["left_leg"].end[0]
    right_x = parts["right_leg"].end[0]
    assert left_x > 0.0 > right_x
    assert left_x == pytest.approx(-right_x)
    swing = GAIT_PRESETS[ActivityClass.WALKING].swing_amplitude
    assert left_x == pytest.approx(0.85 * math.sin(swing))


def test_phone_arm_holds_hand_at_head():
    parts = {p.name: p for p in limb_pose(_walker(ActivityClass.TALKING_ON_PHONE), 0.3)}
    hand = parts["right_arm"].end
    head = parts["head"].start
    assert abs(hand[2] - 1.6) < 0.05
    assert np.linalg.norm(hand[:2] - head[:2]) < 0.25


def test_injured_leg_swings_less():
    parts = {p.name: p for p in limb_pose(_walker(ActivityClass.INJURED_LEG_WALKING), 0.125)}
    assert abs(parts["left_leg"].end[0]) < abs(parts["right_leg"].end[0])


def test_dizzy_walker_weaves_sideways():
    actor = _walker(ActivityClass.DIZZY_WALKING)
    period = actor.gait.weave_period
    _, y, _ = actor_frame(actor, period / 4)
    assert y == pytest.approx(actor.gait.weave_amplitude)


def test_fall_progress_and_prone_box():
    gait = replace(GAIT_PRESETS[ActivityClass.FALLING], fall_start=2.0)
    actor = _walker(ActivityClass.FALLING, gait)
    assert fall_progress(actor, 1.0) == 0.0
    assert fall_progress(actor, 2.5) == pytest.approx(0.5)
    assert fall_progress(actor, 5.0) == 1.0
    standing = actor_box(actor, 1.0)
    prone = actor_box(actor, 5.0)
    assert standing.l > 1.5
    assert prone.l < 0.6
    assert prone.w > 1.2
    assert prone.bottom >= -1e-9


def test_vehicle_box_matches_extents():
    traj = Trajectory(np.array([[0.0, 10.0, 2.0, 0.7], [5.0, 12.0, 4.0, 0.7]]))
    box = actor_box(Actor.vehicle(0, traj, extents=(3.0, 1.6, 1.5)), 1.0)
    np.testing.assert_allclose(box.extents, [3.0, 1.6, 1.5], atol=1e-9)
    assert box.category is Category.VEHICLE
    assert box.activity is None


def test_pedestrian_box_carries_activity():
    box = actor_box(_walker(), 0.0)
    assert box.activity is ActivityClass.WALKING
    assert box.bottom == pytest.approx(0.0, abs=0.02)


def test_pose_outside_duration_raises():
    with pytest.raises(TimeOutOfRange):
        pose_actor(_walker(), 11.0, duration=10.0)


def test_actor_requires_activity_for_pedestrians():
    traj = Trajectory(np.array([[0.0, 0.0, 0.0, 0.0]]))
    with pytest.raises(ValueError):
        Actor(0, Category.PEDESTRIAN, traj)
