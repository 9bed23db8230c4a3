"""
Deliberate exploration for high-level connectivity: sweep for stretches, traverse
each qualified candidate as a numbered passage, and reposition between candidates
over the passage network.
"""

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

import core.constants as constants
from core.candidates import (Candidate, CandidateList, CandidateState, enqueue_candidate,
                             next_candidate, qualify_candidate)
from core.classifier import RoomPassageClassifier, default_classifier
from core.config import HLCConfig
from core.controller import closest_rotation, follow_waypoints, forward_is_clear
from core.errors import ArtifactError, NoInitialStretchError, UnreachableError
from core.passage_grid import (PassageGrid, PassageNetwork, bfs_cell_path, cells_to_waypoints,
                               record_travel_edge, serialize_edges, serialize_grid,
                               update_occupancy)
from core.perception import FeatureVector, Stretch, compute_features, detect_stretches, front_clearance
from core.render import render_svg
from core.skeleton import Skeleton, observe_decision, serialize_skeleton
from core.utils import (Point, bearing, circular_mean, distance, format_number, join_artifact_path,
                        logger, normalize_angle, save_artifact)
from core.world import (Action, ActionKind, Pose, StepOutcome, View, World, action_duration,
                        apply_action, scan)


class TerminationReason(enum.Enum):
    END_REACHED = "EndReached"
    HARD_TURN = "HardTurn"
    ROOM_DETECTED = "RoomDetected"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    STUCK = "Stuck"


@dataclass
class TraversalState:
    passage_id: int
    decision_points: list[Pose] = field(default_factory=list)
    orientation_window: deque = field(default_factory=lambda: deque(maxlen=constants.ORIENTATION_WINDOW))
    passage_length: float = 0.0
    width_history: list[float] = field(default_factory=list)


def should_terminate(state: TraversalState, view: View, stretch: Stretch,
                     robot_radius: float = constants.ROBOT_RADIUS_M,
                     features: Optional[FeatureVector] = None) -> Optional[TerminationReason]:
    """
    Checks, in order: the stretch end is near or the way ahead is blocked; the heading
    left the recent average orientation; the passage opened into something wider than
    it is long.
    """
    pose = view.pose
    if (distance(pose.point, stretch.end) <= constants.END_TOLERANCE_M
            or front_clearance(view) - robot_radius <= constants.FRONT_BLOCKED_M + constants.EPSILON):
        return TerminationReason.END_REACHED

    if state.orientation_window:
        average = circular_mean(list(state.orientation_window))
        if abs(normalize_angle(pose.theta - average)) > math.radians(constants.HARD_TURN_DEG):
            return TerminationReason.HARD_TURN

    if state.width_history:
        features = features or compute_features(view)
        mean_width = sum(state.width_history) / len(state.width_history)
        if state.passage_length + features.front_max < constants.ROOM_WIDTH_FACTOR * mean_width:
            return TerminationReason.ROOM_DETECTED
    return None


@dataclass(frozen=True)
class DecisionRecord:
    pose: Pose
    action: str
    outcome: str

    def __str__(self):
        return (f"{format_number(self.pose.x)} {format_number(self.pose.y)} "
                f"{format_number(self.pose.theta)} {self.action} {self.outcome}")


def action_token(action: Action) -> str:
    return f"{action.kind.value}:{format_number(action.magnitude)}"


def outcome_token(action: Action, outcome: StepOutcome) -> str:
    if action.kind is ActionKind.ROTATE:
        return "ok"
    if outcome.distance_traveled <= constants.EPSILON:
        return "blocked"
    return "truncated" if outcome.truncated else "ok"


def serialize_decisions(decisions: list[DecisionRecord]) -> str:
    return "".join(f"{d}\n" for d in decisions)


def parse_decisions(text: str) -> list[DecisionRecord]:
    decisions = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise ArtifactError(f"line {line_number}: expected 'x y theta action outcome'")
        try:
            pose = Pose(float(tokens[0]), float(tokens[1]), float(tokens[2]))
        except ValueError as e:
            raise ArtifactError(f"line {line_number}: malformed pose") from e
        decisions.append(DecisionRecord(pose, tokens[3], tokens[4]))
    return decisions


########################################################################
#############  Session #################################################
########################################################################

class ExplorationSession:
    """Mutable state of one exploration run; owns its grid, network and skeleton."""

    def __init__(self, world: World, start: Pose, config: HLCConfig = HLCConfig(),
                 classifier: Optional[RoomPassageClassifier] = None):
        self.world = world
        self.config = config
        self.classifier = classifier or default_classifier(config.stretch_length)
        self.grid = PassageGrid(world.width, world.height)
        self.network = PassageNetwork()
        self.skeleton = Skeleton()
        self.candidates = CandidateList()
        self.pose = start
        self.clock = 0.0
        self.distance = 0.0
        self.decisions: list[DecisionRecord] = []
        self.features: list[FeatureVector] = []
        self.decision_points: list[Point] = []
        self.passages = 0
        self.reasons: list[TerminationReason] = []

    def out_of_time(self) -> bool:
        return self.clock >= self.config.exploration_budget_s

    def observe(self, passage_id: Optional[int] = None) -> tuple[View, FeatureVector]:
        """One decision point: scan, features, skeleton update."""
        view = scan(self.world, self.pose, self.config)
        features = compute_features(view)
        self.features.append(features)
        self.decision_points.append(self.pose.point)
        observe_decision(self.skeleton, self.pose, view, passage_id)
        return view, features

    def act(self, action: Action, passage_id: Optional[int] = None) -> StepOutcome:
        outcome = apply_action(self.world, self.pose, action, self.config.robot_radius)
        self.clock += action_duration(action, outcome, self.config)
        self.distance += outcome.distance_traveled
        if passage_id is not None and outcome.distance_traveled > constants.EPSILON:
            record_travel_edge(self.grid, self.network, self.pose, outcome.new_pose, passage_id)
        self.pose = outcome.new_pose
        return outcome

    def record(self, pose: Pose, action: str, outcome: str) -> None:
        self.decisions.append(DecisionRecord(pose, action, outcome))

    def glimpse(self, view: View, features: FeatureVector) -> int:
        """Qualifies and enqueues the stretches in a view; returns how many were added."""
        added = 0
        for stretch in detect_stretches(view, self.config.stretch_length):
            if qualify_candidate(stretch, self.grid, self.candidates, self.classifier, features):
                enqueue_candidate(self.candidates, Candidate(stretch), self.config.stretch_length)
                added += 1
        return added

    def on_drive_step(self, pose: Pose, view: View, action: Action, outcome: StepOutcome, source) -> None:
        """Bookkeeping for decisions made by the navigation controller."""
        self.features.append(compute_features(view))
        self.decision_points.append(pose.point)
        self.clock += action_duration(action, outcome, self.config)
        self.distance += outcome.distance_traveled
        self.record(pose, action_token(action), outcome_token(action, outcome))


@dataclass
class ExplorationResult:
    grid: PassageGrid
    network: PassageNetwork
    skeleton: Skeleton
    decisions: list[DecisionRecord]
    features: list[FeatureVector]
    elapsed: float
    distance: float
    passages: int
    final_pose: Pose
    reasons: list[TerminationReason] = field(default_factory=list)
    candidates: CandidateList = field(default_factory=CandidateList)


########################################################################
#############  Passage traversal #######################################
########################################################################

def _veer(session: ExplorationSession, view: View) -> Optional[float]:
    """Signed smallest rotation away from a side obstruction, or None when both sides are clear."""
    low, high = (math.radians(a) for a in constants.LATERAL_SECTOR_DEG)
    radius = session.config.robot_radius
    left = view.sector(low, high)
    right = view.sector(-high, -low)
    left_gap = float(left.min()) - radius if left.size else math.inf
    right_gap = float(right.min()) - radius if right.size else math.inf
    smallest = min(session.config.rotations)
    if min(left_gap, right_gap) >= session.config.veer_clearance:
        return None
    return -smallest if left_gap <= right_gap else smallest


def _steer(session: ExplorationSession, view: View, stretch: Stretch) -> Action:
    """Turn toward the stretch end, else the largest clear move that does not overshoot it."""
    pose = session.pose
    config = session.config
    angle = bearing(pose.point, pose.theta, stretch.end)
    if abs(angle) > min(config.rotations) / 2:
        return Action(ActionKind.ROTATE, closest_rotation(angle, config.rotations))
    along = distance(pose.point, stretch.end) * math.cos(angle)
    for move in sorted(config.moves, reverse=True):
        if move <= along + constants.END_TOLERANCE_M and forward_is_clear(view, move, config.robot_radius):
            return Action(ActionKind.FORWARD, move)
    return Action(ActionKind.FORWARD, min(config.moves))


def traverse_passage(session: ExplorationSession, candidate: Candidate) -> TerminationReason:
    """
    Travels along a candidate's stretch as a new passage, labeling the grid from every
    view and queueing stretches glimpsed on the way, until a termination condition holds.
    """
    passage_id = session.passages
    session.passages += 1
    stretch = candidate.stretch
    state = TraversalState(passage_id)
    config = session.config
    logger.info(f"Passage {passage_id}: traversing from ({session.pose.x:.2f}, {session.pose.y:.2f}) "
                f"toward ({stretch.end[0]:.2f}, {stretch.end[1]:.2f})")

    record_travel_edge(session.grid, session.network, session.pose, session.pose, passage_id)
    blocked = 0
    reason = None
    while reason is None:
        if session.out_of_time() or len(state.decision_points) >= config.decisions_per_candidate:
            reason = TerminationReason.BUDGET_EXHAUSTED
            break

        view, features = session.observe(passage_id)
        update_occupancy(session.grid, session.network, view, passage_id)
        session.glimpse(view, features)
        state.decision_points.append(session.pose)
        if state.passage_length >= constants.ROOM_TEST_START_M:
            state.width_history.append(features.left_max + features.right_max)

        reason = should_terminate(state, view, stretch, config.robot_radius, features)
        if reason is not None:
            break
        state.orientation_window.append(session.pose.theta)

        pose = session.pose
        away = _veer(session, view)
        if away is not None:
            turn = Action(ActionKind.ROTATE, away)
            step = Action(ActionKind.FORWARD, min(config.moves))
            session.act(turn, passage_id)
            outcome = session.act(step, passage_id)
            session.record(pose, f"{action_token(turn)}+{action_token(step)}", outcome_token(step, outcome))
        else:
            step = _steer(session, view, stretch)
            outcome = session.act(step, passage_id)
            session.record(pose, action_token(step), outcome_token(step, outcome))

        if step.kind is ActionKind.FORWARD:
            state.passage_length += outcome.distance_traveled
            blocked = blocked + 1 if outcome.distance_traveled <= constants.EPSILON else 0
            if blocked >= constants.STUCK_LIMIT:
                reason = TerminationReason.STUCK

    session.reasons.append(reason)
    logger.info(f"Passage {passage_id}: {reason.value} after {len(state.decision_points)} decisions, "
                f"{state.passage_length:.2f} m")
    return reason


########################################################################
#############  Repositioning ###########################################
########################################################################

def _turn_to(session: ExplorationSession, heading: float) -> None:
    smallest = min(session.config.rotations)
    for _ in range(int(math.ceil(math.pi / smallest)) + 1):
        offset = normalize_angle(heading - session.pose.theta)
        if abs(offset) <= smallest / 2 or session.out_of_time():
            return
        session.observe()
        pose = session.pose
        turn = Action(ActionKind.ROTATE, closest_rotation(offset, session.config.rotations))
        outcome = session.act(turn)
        session.record(pose, action_token(turn), outcome_token(turn, outcome))


def route_to(session: ExplorationSession, goal: Point) -> list[Point]:
    """
    Waypoints to `goal`: the goal itself when it is within 1 m, otherwise a passage
    network path converted to recorded decision points.

    Raises:
        UnreachableError: the network does not connect the robot to the goal.
    """
    if distance(session.pose.point, goal) <= constants.NEAR_START_M:
        return [goal]
    here = session.grid.cell_of(session.pose.point)
    if here not in session.network:
        here = session.network.nearest_vertex(session.pose.point, session.grid.cell_size)
    there = session.network.nearest_vertex(goal, session.grid.cell_size)
    if here is None or there is None:
        raise UnreachableError("the passage network is empty")
    path = bfs_cell_path(session.network, here, there)
    return cells_to_waypoints(path, session.decision_points, session.grid.cell_size) + [goal]


def travel_to(session: ExplorationSession, goal: Point) -> bool:
    waypoints = route_to(session, goal)
    result = follow_waypoints(session.world, session.pose, waypoints, session.skeleton, session.config,
                              session.config.decisions_per_candidate, should_stop=session.out_of_time,
                              on_step=session.on_drive_step)
    session.pose = result.final_pose
    return result.reached


def goto_candidate_start(session: ExplorationSession, candidate: Candidate) -> bool:
    """Moves within 0.5 m of the candidate's start and faces along its stretch."""
    try:
        reached = travel_to(session, candidate.start.point)
    except UnreachableError as e:
        logger.warning(f"Candidate at {candidate.start.point} rejected: {e}")
        return False
    if not reached:
        logger.warning(f"Candidate at {candidate.start.point} rejected: start not reached")
        return False
    _turn_to(session, candidate.stretch.direction)
    return True


def sweep(session: ExplorationSession) -> int:
    """Rotates in place through a full turn by the smallest rotation, queueing stretches."""
    smallest = min(session.config.rotations)
    added = 0
    for _ in range(int(math.ceil(constants.FULL_ANGLE / smallest - constants.EPSILON))):
        if session.out_of_time():
            break
        view, features = session.observe()
        added += session.glimpse(view, features)
        pose = session.pose
        turn = Action(ActionKind.ROTATE, smallest)
        outcome = session.act(turn)
        session.record(pose, action_token(turn), outcome_token(turn, outcome))
    return added


def relocate(session: ExplorationSession) -> bool:
    """Travels to the Passage cell farthest from the robot and sweeps again."""
    cells = session.grid.passage_cells()
    if not cells:
        return False
    farthest = max(cells, key=lambda c: (distance(session.grid.center(c), session.pose.point), -c[0], -c[1]))
    goal = session.grid.center(farthest)
    logger.info(f"Candidate list empty; relocating to cell {farthest}")
    try:
        travel_to(session, goal)
    except UnreachableError as e:
        logger.warning(f"Relocation failed: {e}")
        return False
    return sweep(session) > 0


########################################################################
#############  Exploration #############################################
########################################################################

def seeded_start(world: World, seed: Optional[int] = None) -> Pose:
    """The world's start pose; a nonzero seed turns the initial heading at random."""
    start = world.start or Pose(world.width / 2, world.height / 2, 0.0)
    if not seed:
        return start
    rng = np.random.default_rng(seed)
    return Pose(start.x, start.y, start.theta + float(rng.uniform(-math.pi, math.pi)))


def explore(world: World, start: Optional[Pose] = None, config: HLCConfig = HLCConfig(),
            classifier: Optional[RoomPassageClassifier] = None) -> ExplorationResult:
    """
    Explores until no candidate remains or the simulated time budget is spent.

    Raises:
        NoInitialStretchError: the initial sweep found nothing to explore.
    """
    session = ExplorationSession(world, start or seeded_start(world), config, classifier)
    logger.info(f"Exploring {world.name} from ({session.pose.x:.2f}, {session.pose.y:.2f}), "
                f"budget {config.exploration_budget_s:.0f} s")
    if sweep(session) == 0:
        raise NoInitialStretchError("the initial rotation found no stretch to explore")

    relocated = False
    while not session.out_of_time():
        candidate = next_candidate(session.candidates, session.grid)
        if candidate is None:
            if relocated or not relocate(session):
                break
            relocated = True
            continue
        if not goto_candidate_start(session, candidate):
            session.candidates.reject(candidate)
            continue
        candidate.state = CandidateState.EXPLORED
        traverse_passage(session, candidate)
        relocated = False

    logger.info(f"Exploration finished: {session.passages} passages, {len(session.grid.passage_cells())} "
                f"passage cells, {len(session.skeleton)} regions, {session.clock:.1f} s simulated")
    return ExplorationResult(session.grid, session.network, session.skeleton, session.decisions,
                             session.features, session.clock, session.distance, session.passages,
                             session.pose, session.reasons, session.candidates)


def features_frame(features: list[FeatureVector]) -> pd.DataFrame:
    return pd.DataFrame([f.as_dict() for f in features], columns=FeatureVector.field_names())


def write_exploration(result: ExplorationResult, world: World, out_dir: str, storage_client=None) -> list[str]:
    """Writes the exploration artifacts under `out_dir`; returns their paths."""
    artifacts = {
        "exploration.grid": serialize_grid(result.grid),
        "exploration.edges": serialize_edges(result.network),
        "exploration.skeleton": serialize_skeleton(result.skeleton),
        "decisions.log": serialize_decisions(result.decisions),
        "features.csv": features_frame(result.features).to_csv(index=False, float_format="%.6f"),
        "exploration.svg": render_svg(world, grid=result.grid, skeleton=result.skeleton,
                                      trace=[d.pose.point for d in result.decisions]),
    }
    paths = []
    for name, text in artifacts.items():
        path = join_artifact_path(out_dir, name)
        save_artifact(text, path, storage_client)
        paths.append(path)
    logger.info(f"Exploration artifacts written to {out_dir}")
    return paths
