import math
from collections import Counter

import numpy as np
import pytest

from core.benchmarks import box_world
from core.config import HLCConfig
from core.controller import (DecisionContext, DecisionSource, TaskResult, TraceStep, active_waypoint,
                             closest_rotation, decide, follow_waypoints, forward_is_clear, heuristic_vote,
                             parse_trace, run_task, serialize_trace, waypoint_visible)
from core.errors import ArtifactError
from core.planner import Plan, WaypointStatus
from core.skeleton import Skeleton
from core.world import Action, ActionKind, Pose, World, scan

BOX = ((0.0, 0.0, 10.0, 0.0), (10.0, 0.0, 10.0, 10.0), (10.0, 10.0, 0.0, 10.0), (0.0, 10.0, 0.0, 0.0))


def context(world, pose, waypoints=(), target=(8.0, 5.0), last_rotation=0.0) -> DecisionContext:
    plan = Plan(target=target, waypoints=list(waypoints))
    return DecisionContext(pose, scan(world, pose), plan, target, Skeleton(), last_rotation=last_rotation)


@pytest.mark.parametrize(
    "angle,expected",
    [
        (0.3, 0.25),
        (-0.8, -1.0),
        (0.375, 0.25),
        (3.0, 1.57),
        (-0.05, -0.25),
    ]
)
def test_closest_rotation(angle, expected):
    assert closest_rotation(angle, (0.25, 0.5, 1.0, 1.57)) == expected


def test_forward_is_clear_uses_the_swept_disc():
    view = scan(box_world(), Pose(8.0, 5.0, 0.0))
    assert forward_is_clear(view, 0.8, 0.4)
    assert not forward_is_clear(view, 1.6, 0.4)


def test_heuristics_head_for_the_goal():
    ctx = context(box_world(), Pose(5.0, 5.0, 0.0))
    assert heuristic_vote(ctx, (8.0, 5.0)) == Action(ActionKind.FORWARD, 3.2)


def test_heuristic_ties_keep_action_order():
    # Far behind: both quarter turns beat the smallest forward move and tie with each other
    ctx = context(box_world(), Pose(8.0, 5.0, 0.0))
    assert heuristic_vote(ctx, (1.0, 5.0)) == Action(ActionKind.ROTATE, 1.57)


def test_heuristics_avoid_reversing_the_last_turn():
    ctx = context(box_world(), Pose(8.0, 5.0, 0.0), last_rotation=-0.5)
    assert heuristic_vote(ctx, (1.0, 5.0)) == Action(ActionKind.ROTATE, -1.57)


def test_everything_vetoed_turns_a_little():
    ctx = context(box_world(), Pose(5.0, 5.0, 0.0))
    assert heuristic_vote(ctx, (8.0, 5.0), veto=lambda c, a: True) == Action(ActionKind.ROTATE, 0.25)


def test_waypoint_visible():
    world = World(10.0, 10.0, BOX + ((4.0, 4.5, 4.0, 5.5),))
    view = scan(world, Pose(2.0, 5.0, 0.0))
    assert not waypoint_visible(view, (5.0, 5.0))
    assert waypoint_visible(view, (3.5, 5.0))
    assert waypoint_visible(view, (2.0, 5.0))
    assert not waypoint_visible(view, (0.5, 5.0))


def test_plan_rule_moves_toward_an_aligned_waypoint():
    ctx = context(box_world(), Pose(2.0, 5.0, 0.0), waypoints=[(6.0, 5.0), (8.0, 5.0)])
    assert decide(ctx) == (Action(ActionKind.FORWARD, 3.2), DecisionSource.PLAN_RULE)


def test_plan_rule_turns_toward_a_misaligned_waypoint():
    ctx = context(box_world(), Pose(2.0, 5.0, math.pi / 2), waypoints=[(6.0, 5.0)])
    assert decide(ctx) == (Action(ActionKind.ROTATE, -1.57), DecisionSource.PLAN_RULE)


def test_plan_rule_limits_the_move_to_the_waypoint_distance():
    ctx = context(box_world(), Pose(5.7, 5.0, 0.0), waypoints=[(6.0, 5.0), (8.0, 5.0)])
    assert decide(ctx) == (Action(ActionKind.FORWARD, 1.6), DecisionSource.PLAN_RULE)
    assert ctx.plan.statuses == [WaypointStatus.VISITED, WaypointStatus.PENDING]


def test_occluded_waypoint_is_skipped_for_a_visible_one_nearby():
    world = World(10.0, 10.0, BOX + ((4.0, 4.5, 4.0, 5.5),))
    ctx = context(world, Pose(2.0, 5.0, 0.0), waypoints=[(5.0, 5.0), (3.5, 6.5), (8.0, 8.0)])
    assert active_waypoint(ctx) == (3.5, 6.5)
    assert ctx.plan.statuses[0] is WaypointStatus.SKIPPED
    assert decide(ctx) == (Action(ActionKind.ROTATE, 1.0), DecisionSource.PLAN_RULE)
    assert ctx.goal == (3.5, 6.5)


def test_visiting_a_waypoint_skips_earlier_ones():
    ctx = context(box_world(), Pose(6.0, 5.0, 0.0), waypoints=[(3.0, 5.0), (4.0, 5.0), (6.2, 5.0), (8.0, 5.0)])
    assert active_waypoint(ctx) == (8.0, 5.0)
    assert ctx.plan.statuses == [WaypointStatus.SKIPPED, WaypointStatus.SKIPPED,
                                 WaypointStatus.VISITED, WaypointStatus.PENDING]


def test_without_a_plan_the_heuristics_decide():
    ctx = context(box_world(), Pose(5.0, 5.0, 0.0))
    action, source = decide(ctx)
    assert source is DecisionSource.HEURISTIC
    assert action == Action(ActionKind.FORWARD, 3.2)
    assert ctx.goal == (8.0, 5.0)


def test_target_one_meter_ahead():
    result = run_task(box_world(), Pose(5.0, 5.0, 0.0), (6.0, 5.0), Skeleton())
    assert result.reached
    assert result.actions <= 2
    assert result.final_pose.x == pytest.approx(5.8)
    assert result.sim_time == pytest.approx(0.8)
    assert result.plans_made >= 1


def test_task_builds_the_skeleton():
    skeleton = Skeleton()
    result = run_task(box_world(), Pose(1.5, 1.5, 0.0), (8.5, 8.5), skeleton, record_trace=True)
    assert result.reached
    assert len(skeleton) >= 2
    assert (8.5, 8.5) in skeleton.points_of_interest
    assert len(result.trace) == result.actions
    assert sum(result.decisions_by.values()) == result.actions


def test_heuristics_only_navigation():
    result = run_task(box_world(), Pose(2.0, 2.0, 0.0), (8.0, 8.0), Skeleton(), use_plan=False,
                      record_trace=True)
    assert result.reached
    assert result.heuristic_fraction == 1.0
    assert result.plans_made == 0
    assert all(step.goal == (8.0, 8.0) for step in result.trace)


def test_empty_skeleton_means_pure_heuristic_control():
    world = box_world()
    planned = run_task(world, Pose(2.0, 2.0, 0.0), (8.0, 8.0), Skeleton())
    reactive = run_task(world, Pose(2.0, 2.0, 0.0), (8.0, 8.0), Skeleton(), use_plan=False)
    assert planned.decisions_by[DecisionSource.PLAN_RULE] == 0
    assert planned.plans_made == 1
    assert planned.last_plan.failure == "NoModelError"
    assert planned.actions == reactive.actions
    assert planned.final_pose == reactive.final_pose


def test_walled_off_target_uses_the_whole_action_cap():
    world = World(10.0, 10.0, BOX + ((5.0, 0.0, 5.0, 10.0),))
    result = run_task(world, Pose(2.0, 5.0, 0.0), (8.0, 5.0), Skeleton())
    assert not result.reached
    assert result.actions == 750
    assert result.final_pose.x < 5.0


def test_follow_waypoints_reaches_the_last_point():
    result = follow_waypoints(box_world(), Pose(2.0, 5.0, 0.0), [(5.0, 5.0), (8.0, 8.0)], Skeleton(),
                              HLCConfig(), max_actions=100)
    assert result.reached
    assert result.plans_made == 1


def test_follow_waypoints_honors_the_stop_callback():
    result = follow_waypoints(box_world(), Pose(2.0, 5.0, 0.0), [(8.0, 5.0)], Skeleton(), HLCConfig(),
                              max_actions=100, should_stop=lambda: True)
    assert not result.reached
    assert result.actions == 0


def test_heuristic_fraction_of_an_idle_task():
    result = TaskResult(False, 0, 0.0, 0.0, Counter(), Pose(0.0, 0.0))
    assert result.heuristic_fraction == 0.0


def test_trace_text():
    step = TraceStep(3, Pose(1.0, 2.0, 0.5), DecisionSource.PLAN_RULE, Action(ActionKind.ROTATE, -0.25),
                     (4.0, 5.0))
    line = str(step)
    assert line == "step 3 1.000000 2.000000 0.500000 PlanRule rotate -0.250000 4.000000 5.000000"
    assert parse_trace(serialize_trace([step, step])) == [(1.0, 2.0), (1.0, 2.0)]


@pytest.mark.parametrize("text", ["move 1 2", "step 0 x 2 0 PlanRule rotate 1 0 0", "step 0 1 2"])
def test_parse_trace_errors(text):
    with pytest.raises(ArtifactError):
        parse_trace(text)


def test_features_are_computed_once():
    ctx = context(box_world(), Pose(5.0, 5.0, 0.0))
    assert ctx.features is ctx.features
    assert ctx.features.front_max == pytest.approx(np.max(ctx.view.sector(-0.27, 0.27)), rel=0.05)
