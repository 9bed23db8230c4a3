"""
Reactive navigation: follow plan waypoints with two plan rules and fall back to a
weighted vote among simple heuristics.
"""

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

import core.constants as constants
from core.config import HLCConfig
from core.errors import ArtifactError
from core.perception import FeatureVector, compute_features
from core.planner import Plan, WaypointStatus, make_plan
from core.skeleton import Skeleton, observe_decision
from core.utils import Point, bearing, distance, format_number, logger
from core.world import (Action, ActionKind, Pose, StepOutcome, View, World, action_duration,
                        action_set, apply_action, scan)


class DecisionSource(enum.Enum):
    PLAN_RULE = "PlanRule"
    HEURISTIC = "Heuristic"


@dataclass
class DecisionContext:
    pose: Pose
    view: View
    plan: Plan
    target: Point
    skeleton: Skeleton
    actions_used: int = 0
    config: HLCConfig = field(default_factory=HLCConfig)
    last_rotation: float = 0.0
    goal: Optional[Point] = None    # set by decide to the point it steered toward
    _features: Optional[FeatureVector] = None

    @property
    def features(self) -> FeatureVector:
        if self._features is None:
            self._features = compute_features(self.view)
        return self._features


Veto = Callable[[DecisionContext, Action], bool]


@dataclass(frozen=True)
class TraceStep:
    step: int
    pose: Pose
    source: DecisionSource
    action: Action
    goal: Point

    def __str__(self):
        return (f"step {self.step} {format_number(self.pose.x)} {format_number(self.pose.y)} "
                f"{format_number(self.pose.theta)} {self.source.value} {self.action.kind.value} "
                f"{format_number(self.action.magnitude)} {format_number(self.goal[0])} {format_number(self.goal[1])}")


@dataclass
class TaskResult:
    reached: bool
    actions: int
    sim_time: float
    distance: float
    decisions_by: Counter
    final_pose: Pose
    trace: list[TraceStep] = field(default_factory=list)
    plans_made: int = 0
    planning_time: float = 0.0
    last_plan: Optional[Plan] = None

    @property
    def heuristic_fraction(self) -> float:
        total = sum(self.decisions_by.values())
        return self.decisions_by[DecisionSource.HEURISTIC] / total if total else 0.0


########################################################################
#############  Advisors ################################################
########################################################################

def forward_is_clear(view: View, move: float, radius: float,
                     margin: float = constants.SWEEP_MARGIN_M) -> bool:
    """True when no observed obstacle point lies in the disc's swept path for `move` meters."""
    reach = radius + margin
    rel = view.relative_angles
    hit = view.ranges < view.max_range
    along = view.ranges * np.cos(rel)
    lateral = np.abs(view.ranges * np.sin(rel))
    near = hit & (lateral < reach)
    extent = move + np.sqrt(np.maximum(reach * reach - lateral * lateral, 0.0))
    return not bool(np.any(near & (along > 0) & (along < extent)))


def avoid_obstruction(ctx: DecisionContext, action: Action) -> bool:
    """Veto forward moves whose swept disc would touch something in view."""
    if action.kind is ActionKind.ROTATE:
        return False
    return not forward_is_clear(ctx.view, action.magnitude, ctx.config.robot_radius)


def _greedy(ctx: DecisionContext, action: Action, goal: Point) -> float:
    pose = ctx.pose
    if action.kind is ActionKind.FORWARD:
        moved = (pose.x + action.magnitude * math.cos(pose.theta), pose.y + action.magnitude * math.sin(pose.theta))
        return -distance(moved, goal)
    heading = pose.theta + action.magnitude
    ahead = (pose.x + constants.GREEDY_LOOKAHEAD_M * math.cos(heading),
             pose.y + constants.GREEDY_LOOKAHEAD_M * math.sin(heading))
    return -distance(ahead, goal)


def _exit_dead_end(ctx: DecisionContext, action: Action, goal: Point) -> float:
    if (action.kind is ActionKind.FORWARD and ctx.features.front_max < constants.DEAD_END_FRONT_M
            and distance(ctx.pose.point, goal) >= constants.DEAD_END_FRONT_M):
        return -1.0
    return 0.0


def _no_oscillation(ctx: DecisionContext, action: Action) -> float:
    if action.kind is ActionKind.ROTATE and ctx.last_rotation * action.magnitude < 0:
        return -1.0
    return 0.0


def heuristic_vote(ctx: DecisionContext, goal: Point, veto: Optional[Veto] = None) -> Action:
    """
    Scores every action with the weighted advisors and returns the best one. Ties keep
    the action-list order. When every action is vetoed the smallest rotation escapes.
    """
    veto = veto or avoid_obstruction
    weights = constants.ADVISOR_WEIGHTS
    best, best_score = None, -math.inf
    for action in action_set(ctx.config):
        if veto(ctx, action):
            continue
        score = (weights["greedy"] * _greedy(ctx, action, goal)
                 + weights["exit_dead_end"] * _exit_dead_end(ctx, action, goal)
                 + weights["no_oscillation"] * _no_oscillation(ctx, action))
        if score > best_score + constants.EPSILON:
            best, best_score = action, score
    if best is None:
        return Action(ActionKind.ROTATE, min(ctx.config.rotations))
    return best


########################################################################
#############  Plan rules ##############################################
########################################################################

def waypoint_visible(view: View, waypoint: Point) -> bool:
    """A ray toward the waypoint, within the sensor arc, reaches at least its distance."""
    d = distance(view.pose.point, waypoint)
    if d <= constants.EPSILON:
        return True
    index = view.ray_toward(bearing(view.pose.point, view.pose.theta, waypoint))
    return index is not None and view.ranges[index] >= d - constants.EPSILON


def active_waypoint(ctx: DecisionContext) -> Optional[Point]:
    """
    Marks nearby waypoints Visited and returns the next unobstructed pending one. Occluded
    waypoints are Skipped when a later one is visible within 3 m.
    """
    plan = ctx.plan
    for k in plan.pending():
        if distance(ctx.pose.point, plan.waypoints[k]) <= constants.WAYPOINT_VISITED_M:
            plan.mark(k, WaypointStatus.VISITED)
            # Waypoints passed over on the way are never revisited
            for earlier in range(k):
                plan.mark(earlier, WaypointStatus.SKIPPED)

    pending = plan.pending()
    if not pending:
        return None
    first = pending[0]
    if waypoint_visible(ctx.view, plan.waypoints[first]):
        return plan.waypoints[first]

    for k in pending[1:]:
        w = plan.waypoints[k]
        if distance(ctx.pose.point, w) <= constants.WAYPOINT_SKIP_M and waypoint_visible(ctx.view, w):
            for skipped in pending:
                if skipped >= k:
                    break
                plan.mark(skipped, WaypointStatus.SKIPPED)
            return w

    for k in pending[1:]:
        if waypoint_visible(ctx.view, plan.waypoints[k]):
            return plan.waypoints[k]
    return None


def closest_rotation(angle: float, rotations: tuple[float, ...]) -> float:
    """Signed rotation from the set nearest to `angle`; ties go to the smaller size."""
    options = sorted(rotations) + [-r for r in sorted(rotations)]
    return min(options, key=lambda r: (abs(r - angle), abs(r)))


def decide(ctx: DecisionContext, veto: Optional[Veto] = None) -> tuple[Action, DecisionSource]:
    """
    Plan rules first: turn toward the active waypoint when misaligned by more than 10 degrees,
    else take the largest clear forward move toward it. Otherwise vote among heuristics.
    """
    veto = veto or avoid_obstruction
    waypoint = active_waypoint(ctx)
    if waypoint is not None:
        ctx.goal = waypoint
        angle = bearing(ctx.pose.point, ctx.pose.theta, waypoint)
        if abs(angle) > math.radians(constants.PLAN_ALIGNMENT_DEG):
            return Action(ActionKind.ROTATE, closest_rotation(angle, ctx.config.rotations)), DecisionSource.PLAN_RULE
        limit = distance(ctx.pose.point, waypoint) + constants.WAYPOINT_VISITED_M
        for move in sorted(ctx.config.moves, reverse=True):
            action = Action(ActionKind.FORWARD, move)
            if move <= limit and not veto(ctx, action):
                return action, DecisionSource.PLAN_RULE

    if waypoint is None:
        pending = ctx.plan.pending()
        ctx.goal = ctx.plan.waypoints[pending[0]] if pending else ctx.target
    return heuristic_vote(ctx, ctx.goal, veto), DecisionSource.HEURISTIC


########################################################################
#############  Driving #################################################
########################################################################

StepObserver = Callable[[Pose, View, Action, StepOutcome, DecisionSource], None]


def drive(world: World, start: Pose, target: Point, skeleton: Skeleton, config: HLCConfig,
          plan: Plan, max_actions: int, replan: bool = True, passage_id: Optional[int] = None,
          veto: Optional[Veto] = None, should_stop: Optional[Callable[[], bool]] = None,
          on_step: Optional[StepObserver] = None, record_trace: bool = False) -> TaskResult:
    """
    The decision loop shared by tasks and exploration repositioning: scan, update the
    skeleton, stop at the target, decide, act.
    """
    pose = start
    actions, sim_time, traveled = 0, 0.0, 0.0
    sources = Counter()
    trace = []
    plans_made = 1 if plan.waypoints or plan.failure else 0
    planning_time = plan.planning_time
    last_rotation = 0.0
    reached = False

    while True:
        view = scan(world, pose, config)
        observe_decision(skeleton, pose, view, passage_id)
        if distance(pose.point, target) <= constants.SUCCESS_RADIUS_M:
            reached = True
            break
        if actions >= max_actions or (should_stop is not None and should_stop()):
            break
        # A failed plan is not retried within the task
        if replan and plan.waypoints and plan.exhausted:
            plan = make_plan(skeleton, pose.point, target)
            plans_made += 1
            planning_time += plan.planning_time

        ctx = DecisionContext(pose, view, plan, target, skeleton, actions, config, last_rotation)
        action, source = decide(ctx, veto)
        outcome = apply_action(world, pose, action, config.robot_radius)
        if record_trace:
            trace.append(TraceStep(actions, pose, source, action, ctx.goal))
        if on_step is not None:
            on_step(pose, view, action, outcome, source)

        sim_time += action_duration(action, outcome, config)
        traveled += outcome.distance_traveled
        actions += 1
        sources[source] += 1
        if action.kind is ActionKind.ROTATE:
            last_rotation = action.magnitude
        pose = outcome.new_pose

    return TaskResult(reached, actions, sim_time, traveled, sources, pose, trace,
                      plans_made, planning_time, plan)


def run_task(world: World, start: Pose, target: Point, skeleton: Skeleton,
             config: HLCConfig = HLCConfig(), use_plan: bool = True, veto: Optional[Veto] = None,
             record_trace: bool = False) -> TaskResult:
    """
    Travels from `start` to `target` within the action cap. The skeleton keeps learning
    from every decision; with `use_plan` off the robot relies on heuristics alone.
    """
    skeleton.register_point_of_interest(target)
    plan = make_plan(skeleton, start.point, target) if use_plan else Plan(target=target)
    result = drive(world, start, target, skeleton, config, plan, config.actions_per_target,
                   replan=use_plan, veto=veto, record_trace=record_trace)
    logger.debug(f"Task to ({target[0]:.2f}, {target[1]:.2f}): reached={result.reached} "
                 f"actions={result.actions} heuristic={result.heuristic_fraction:.2f}")
    return result


def follow_waypoints(world: World, start: Pose, waypoints: list[Point], skeleton: Skeleton,
                     config: HLCConfig, max_actions: int,
                     should_stop: Optional[Callable[[], bool]] = None,
                     on_step: Optional[StepObserver] = None) -> TaskResult:
    """Drives through a fixed waypoint list to its last point without replanning."""
    plan = Plan(target=waypoints[-1], waypoints=list(waypoints))
    return drive(world, start, waypoints[-1], skeleton, config, plan, max_actions, replan=False,
                 should_stop=should_stop, on_step=on_step)


def serialize_trace(trace: list[TraceStep]) -> str:
    return "".join(f"{step}\n" for step in trace)


def parse_trace(text: str) -> list[Point]:
    """Robot positions from a trace log."""
    points = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] != "step" or len(tokens) != 10:
            raise ArtifactError(f"line {line_number}: expected a step record")
        try:
            points.append((float(tokens[2]), float(tokens[3])))
        except ValueError as e:
            raise ArtifactError(f"line {line_number}: malformed position") from e
    return points
