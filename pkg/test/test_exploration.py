import itertools
import math

import numpy as np
import pandas as pd
import pytest

from core.benchmarks import corridor_h_world, corridor_world, office_block_world
from core.candidates import Candidate, similar_stretches
from core.config import HLCConfig
from core.errors import ArtifactError, NoInitialStretchError, UnreachableError
from core.exploration import (DecisionRecord, ExplorationResult, ExplorationSession, TerminationReason, TraversalState, action_token,
                              explore, features_frame, goto_candidate_start, outcome_token, parse_decisions, route_to, seeded_start,
                              serialize_decisions, should_terminate, sweep, traverse_passage, write_exploration)
from core.metrics import hallway_coverage
from core.passage_grid import serialize_grid
from core.perception import Stretch
from core.skeleton import serialize_skeleton
from core.utils import distance, normalize_angle
from core.world import Action, ActionKind, Pose, StepOutcome, View, World, cast_ray, clearance


def open_view(pose: Pose, front: float = 20.0) -> View:
    ranges = np.full(660, 20.0)
    ranges[280:380] = front
    return View(pose, ranges)


def stretch_to(end_x: float, y: float = 0.0) -> Stretch:
    return Stretch(origin=(0.0, y), direction=0.0, length=end_x, width=2.0, avg_length=end_x,
                   detected_at=Pose(0.0, y, 0.0))


def room_off_a_corridor() -> World:
    """A 3 m by 2 m corridor opening into a 12 m by 20 m room."""
    walls = (
        (0.0, 9.0, 3.0, 9.0), (0.0, 11.0, 3.0, 11.0), (0.0, 9.0, 0.0, 11.0),
        (3.0, 0.0, 15.0, 0.0), (15.0, 0.0, 15.0, 20.0), (15.0, 20.0, 3.0, 20.0),
        (3.0, 20.0, 3.0, 11.0), (3.0, 9.0, 3.0, 0.0),
    )
    return World(15.0, 20.0, walls, name="room-off-corridor", start=Pose(0.6, 10.0, 0.0))


def test_terminate_near_the_stretch_end():
    state = TraversalState(0)
    state.orientation_window.extend([1.5] * 5)
    view = open_view(Pose(9.7, 0.0, 0.0))
    # End checks come before the hard-turn check
    assert should_terminate(state, view, stretch_to(10.0)) is TerminationReason.END_REACHED


def test_terminate_when_the_way_ahead_is_blocked():
    view = open_view(Pose(2.0, 0.0, 0.0), front=0.45)
    assert should_terminate(TraversalState(0), view, stretch_to(10.0)) is TerminationReason.END_REACHED


@pytest.mark.parametrize(
    "window,theta,expected",
    [
        ([], 1.0, None),
        ([0.0] * 10, 0.5, None),
        ([0.0] * 10, 1.0, TerminationReason.HARD_TURN),
        ([0.1, -0.1] * 20, -0.9, TerminationReason.HARD_TURN),
        ([math.pi - 0.05, -math.pi + 0.05], math.pi, None),
    ]
)
def test_hard_turn(window, theta, expected):
    state = TraversalState(0)
    state.orientation_window.extend(window)
    assert should_terminate(state, open_view(Pose(2.0, 0.0, theta)), stretch_to(10.0)) is expected


@pytest.mark.parametrize(
    "widths,length,front,expected",
    [
        ([], 0.0, 5.0, None),
        ([10.0, 10.0], 1.0, 5.0, TerminationReason.ROOM_DETECTED),
        ([10.0, 10.0], 9.0, 6.0, None),
        ([2.0, 2.5], 1.0, 3.0, None),
    ]
)
def test_room_detected(widths, length, front, expected):
    state = TraversalState(0, passage_length=length, width_history=list(widths))
    view = open_view(Pose(2.0, 0.0, 0.0), front=front)
    view = View(view.pose, np.minimum(view.ranges, front))
    assert should_terminate(state, view, stretch_to(10.0)) is expected


def test_orientation_window_keeps_the_last_forty_headings():
    state = TraversalState(0)
    state.orientation_window.extend(range(50))
    assert len(state.orientation_window) == 40
    assert state.orientation_window[0] == 10


def test_action_and_outcome_tokens():
    forward = Action(ActionKind.FORWARD, 0.8)
    pose = Pose(0.0, 0.0)
    assert action_token(forward) == "forward:0.800000"
    assert outcome_token(forward, StepOutcome(pose, False, 0.8)) == "ok"
    assert outcome_token(forward, StepOutcome(pose, True, 0.3)) == "truncated"
    assert outcome_token(forward, StepOutcome(pose, True, 0.0)) == "blocked"
    assert outcome_token(Action(ActionKind.ROTATE, -0.25), StepOutcome(pose, False, 0.0)) == "ok"


def test_decision_log_text():
    decisions = [DecisionRecord(Pose(1.0, 2.0, 0.25), "rotate:0.250000", "ok"),
                 DecisionRecord(Pose(1.0, 2.0, 0.5), "rotate:-0.250000+forward:0.100000", "truncated")]
    text = serialize_decisions(decisions)
    assert text.splitlines()[1] == "1.000000 2.000000 0.500000 rotate:-0.250000+forward:0.100000 truncated"
    assert parse_decisions(text) == decisions


@pytest.mark.parametrize("text", ["1 2 3 forward:0.1", "1 y 3 forward:0.1 ok"])
def test_parse_decisions_errors(text):
    with pytest.raises(ArtifactError):
        parse_decisions(text)


def test_seeded_start():
    world = corridor_world()
    assert seeded_start(world, 0) == world.start
    turned = seeded_start(world, 3)
    assert turned.point == world.start.point
    assert turned == seeded_start(world, 3)
    assert turned.theta != world.start.theta


def test_sweep_turns_a_full_circle():
    session = ExplorationSession(corridor_world(), Pose(2.0, 2.0, 0.0))
    added = sweep(session)
    assert len(session.decisions) == 26
    assert all(d.action == "rotate:0.250000" and d.outcome == "ok" for d in session.decisions)
    assert session.clock == pytest.approx(6.5)
    assert added == 1
    assert len(session.candidates) == 1


def test_small_room_has_nothing_to_explore():
    world = World(3.0, 3.0, ((0.0, 0.0, 3.0, 0.0), (3.0, 0.0, 3.0, 3.0), (3.0, 3.0, 0.0, 3.0), (0.0, 3.0, 0.0, 0.0)))
    with pytest.raises(NoInitialStretchError):
        explore(world, Pose(1.5, 1.5, 0.0))


def test_traversal_ends_at_the_end_of_a_hall():
    session = ExplorationSession(corridor_world(), Pose(2.0, 2.0, 0.0))
    candidate = Candidate(Stretch((2.0, 2.0), 0.0, 18.0, 2.0, 18.0, Pose(2.0, 2.0, 0.0)))
    assert traverse_passage(session, candidate) is TerminationReason.END_REACHED
    assert session.pose.x == pytest.approx(19.6)
    assert session.passages == 1
    assert session.grid.is_passage((10, 2)) or session.grid.is_passage((10, 1))
    assert all(session.network.graph.nodes[c]["passage_id"] == 0 for c in session.network.vertices())


def test_traversal_stops_where_the_corridor_opens_into_a_room():
    world = room_off_a_corridor()
    session = ExplorationSession(world, world.start)
    candidate = Candidate(Stretch((0.6, 10.0), 0.0, 13.4, 2.0, 13.4, world.start))
    assert traverse_passage(session, candidate) is TerminationReason.ROOM_DETECTED
    assert len(session.decisions) == 1
    assert session.pose.x == pytest.approx(3.8)


def test_traversal_from_a_junction_follows_the_cross_hall():
    world = corridor_h_world()
    start = Pose(4.5, 18.0, 0.0)
    session = ExplorationSession(world, start)
    candidate = Candidate(Stretch((4.5, 18.0), 0.0, 19.1, 3.0, 19.1, start))
    assert traverse_passage(session, candidate) is TerminationReason.END_REACHED
    assert session.pose.x > 20.0
    assert hallway_coverage(session.grid, world)[2] >= 0.7


def test_traversal_from_a_corridor_corner_is_not_a_room():
    world = office_block_world()
    session = ExplorationSession(world, world.start)
    candidate = Candidate(Stretch((7.5, 7.5), 0.0, 25.0, 3.0, 25.0, world.start))
    assert traverse_passage(session, candidate) is not TerminationReason.ROOM_DETECTED
    assert session.pose.x > 20.0
    assert len(session.decisions) > 5


def test_decision_cap_ends_a_traversal():
    session = ExplorationSession(corridor_world(), Pose(2.0, 2.0, 0.0), HLCConfig(decisions_per_candidate=1))
    candidate = Candidate(Stretch((2.0, 2.0), 0.0, 18.0, 2.0, 18.0, Pose(2.0, 2.0, 0.0)))
    assert traverse_passage(session, candidate) is TerminationReason.BUDGET_EXHAUSTED
    assert session.reasons == [TerminationReason.BUDGET_EXHAUSTED]


def test_route_to_a_nearby_goal_is_direct():
    session = ExplorationSession(corridor_world(), Pose(2.0, 2.0, 0.0))
    assert route_to(session, (2.5, 2.5)) == [(2.5, 2.5)]
    with pytest.raises(UnreachableError):
        route_to(session, (15.0, 2.0))


def test_goto_candidate_start_faces_the_stretch():
    session = ExplorationSession(corridor_world(), Pose(2.0, 2.0, 0.0))
    candidate = Candidate(Stretch((2.3, 2.0), math.pi, 1.5, 2.0, 1.5, Pose(2.3, 2.0, math.pi)))
    assert goto_candidate_start(session, candidate)
    smallest = min(session.config.rotations)
    assert abs(normalize_angle(session.pose.theta - math.pi)) <= smallest / 2 + 1e-9
    assert all(d.action.startswith("rotate:") for d in session.decisions)

    far = Candidate(Stretch((15.0, 2.0), 0.0, 4.0, 2.0, 4.0, Pose(15.0, 2.0, 0.0)))
    assert not goto_candidate_start(session, far)


@pytest.mark.slow
def test_explore_a_corridor():
    world = corridor_world()
    result = explore(world)
    assert result.passages >= 1
    assert result.reasons[0] is TerminationReason.END_REACHED
    assert len(result.grid.passage_cells()) >= 15
    assert len(result.skeleton) >= 3
    assert 0.0 < result.elapsed <= HLCConfig().exploration_budget_s + 5.0
    assert result.distance > 15.0


@pytest.fixture(scope="module")
def explored_h():
    world = corridor_h_world()
    return world, explore(world)


@pytest.mark.slow
def test_explore_corridor_h_finds_the_cross_hall(explored_h):
    world, result = explored_h
    assert result.passages >= 3
    assert hallway_coverage(result.grid, world)[2] > 0.0


@pytest.mark.slow
@pytest.mark.parametrize("world_factory", [corridor_h_world, office_block_world])
def test_exploration_captures_the_designed_halls(world_factory):
    world = world_factory()
    captured = np.mean(
        [hallway_coverage(explore(world, seeded_start(world, seed)).grid, world) for seed in range(5)], axis=0,
    )
    assert (captured >= 0.7).all()


@pytest.mark.slow
def test_explore_twice_gives_identical_models(explored_h):
    world, first = explored_h
    second = explore(world)
    assert serialize_grid(second.grid) == serialize_grid(first.grid)
    assert serialize_skeleton(second.skeleton) == serialize_skeleton(first.skeleton)


@pytest.mark.slow
def test_explored_regions_keep_clear_of_walls(explored_h):
    world, result = explored_h
    regions = list(result.skeleton.regions.values())
    assert regions
    for region in regions:
        # One-degree rays as well as the exact nearest-wall distance
        rays = [cast_ray(world, region.center, math.radians(a)) for a in range(360)]
        assert region.radius <= min(rays) + 0.05
        assert region.radius <= clearance(world, region.center) + 0.05
    for a, b in itertools.combinations(regions, 2):
        assert distance(a.center, b.center) >= a.radius + b.radius


@pytest.mark.slow
def test_no_two_queued_stretches_are_similar(explored_h):
    _, result = explored_h
    history = [c.stretch for c in result.candidates.history]
    assert len(history) >= 3
    for earlier, later in itertools.combinations(history, 2):
        assert not similar_stretches(later, earlier)


def test_write_exploration(tmp_path):
    world = corridor_world()
    session = ExplorationSession(world, Pose(2.0, 2.0, 0.0))
    sweep(session)
    result = ExplorationResult(session.grid, session.network, session.skeleton, session.decisions,
                               session.features, session.clock, session.distance, session.passages, session.pose)
    paths = write_exploration(result, world, str(tmp_path))
    names = sorted(p.rsplit("/", 1)[-1] for p in paths)
    assert names == ["decisions.log", "exploration.edges", "exploration.grid", "exploration.skeleton",
                     "exploration.svg", "features.csv"]
    frame = pd.read_csv(tmp_path / "features.csv")
    assert list(frame.columns)[:2] == ["front_avg", "front_max"]
    assert len(frame) == 26
    assert len(parse_decisions((tmp_path / "decisions.log").read_text())) == 26


def test_features_frame_columns():
    assert features_frame([]).shape == (0, 12)
