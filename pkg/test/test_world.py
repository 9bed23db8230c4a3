import math

import numpy as np
import pytest

from core.benchmarks import box_world, corridor_h_world, office_block_world
from core.config import HLCConfig
from core.errors import DegenerateOriginError, WorldParseError, WorldValidationError
from core.world import (Action, ActionKind, Pose, View, World, action_duration, action_set, apply_action,
                        cast_ray, clearance, contact_distance, is_free, load_world, scan, serialize_world)


def brute_force_ray(walls, origin, angle, max_range):
    """Nearest intersection by solving each wall independently."""
    ox, oy = origin
    dx, dy = math.cos(angle), math.sin(angle)
    best = max_range
    for x1, y1, x2, y2 in walls:
        ex, ey = x2 - x1, y2 - y1
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-12:
            continue
        wx, wy = x1 - ox, y1 - oy
        t = (wx * ey - wy * ex) / denom
        s = (wx * dy - wy * dx) / denom
        if t >= 0 and -1e-9 <= s <= 1 + 1e-9:
            best = min(best, t)
    return best


@pytest.mark.parametrize("world_factory", [box_world, corridor_h_world, office_block_world])
def test_cast_ray_matches_brute_force(world_factory):
    world = world_factory()
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 40:
        origin = (rng.uniform(0.5, world.width - 0.5), rng.uniform(0.5, world.height - 0.5))
        if not is_free(world, origin, 0.05):
            continue
        angle = rng.uniform(-math.pi, math.pi)
        expected = brute_force_ray(world.walls, origin, angle, 25.0)
        assert cast_ray(world, origin, angle, 25.0) == pytest.approx(expected, abs=1e-9)
        checked += 1


@pytest.mark.parametrize(
    "angle,expected",
    [
        (0.0, 5.0),
        (math.pi / 2, 5.0),
        (math.pi / 4, 5.0 * math.sqrt(2)),
        (math.pi, 5.0),
    ]
)
def test_cast_ray_in_box(angle, expected):
    assert cast_ray(box_world(), (5.0, 5.0), angle) == pytest.approx(expected)


def test_cast_ray_clamps_to_max_range():
    assert cast_ray(box_world(), (5.0, 5.0), 0.0, max_range=2.0) == 2.0


@pytest.mark.parametrize("origin", [(0.0, 5.0), (5.0, 10.0), (-1.0, 5.0), (5.0, 10.5)])
def test_cast_ray_rejects_degenerate_origins(origin):
    with pytest.raises(DegenerateOriginError):
        cast_ray(box_world(), origin, 0.0)


def test_scan_orders_rays_from_the_left():
    config = HLCConfig(ray_count=5, sensor_arc_deg=180.0)
    view = scan(box_world(), Pose(3.0, 2.0, 0.0), config)
    expected = [8.0, 7.0 * math.sqrt(2), 7.0, 2.0 * math.sqrt(2), 2.0]
    assert view.ranges == pytest.approx(expected)
    assert view.relative_angles[0] == pytest.approx(math.pi / 2)
    assert view.ray_toward(0.0) == 2
    assert view.ray_toward(math.pi) is None


def test_scan_is_deterministic_and_read_only():
    world = box_world()
    a = scan(world, Pose(4.0, 6.0, 1.0))
    b = scan(world, Pose(4.0, 6.0, 1.0))
    assert len(a.ranges) == 660
    assert a == b
    with pytest.raises(ValueError):
        a.ranges[0] = 1.0


def test_view_leaves_the_callers_ranges_writable():
    ranges = np.full(660, 5.0)
    view = View(Pose(1.0, 1.0, 0.0), ranges)
    ranges[0] = 1.0
    assert view.ranges[0] == 5.0


def test_action_set_order():
    actions = action_set()
    assert [a.magnitude for a in actions[:6]] == [0.1, 0.2, 0.4, 0.8, 1.6, 3.2]
    assert all(a.kind is ActionKind.FORWARD for a in actions[:6])
    assert [a.magnitude for a in actions[6:]] == [0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 1.57, -1.57]
    assert str(actions[0]) == "forward 0.100000"


def test_forward_move_in_open_space():
    outcome = apply_action(box_world(), Pose(5.0, 5.0, 0.0), Action(ActionKind.FORWARD, 3.2))
    assert not outcome.truncated
    assert outcome.distance_traveled == pytest.approx(3.2)
    assert outcome.new_pose.x == pytest.approx(8.2)


def test_forward_move_stops_at_robot_clearance():
    outcome = apply_action(box_world(), Pose(9.0, 5.0, 0.0), Action(ActionKind.FORWARD, 0.8))
    assert outcome.truncated
    assert outcome.distance_traveled == pytest.approx(0.6)
    assert outcome.new_pose.x == pytest.approx(9.6)


@pytest.mark.parametrize("world_factory", [box_world, corridor_h_world, office_block_world])
def test_forward_moves_never_break_clearance(world_factory):
    world = world_factory()
    radius = HLCConfig().robot_radius
    moves = [a for a in action_set() if a.kind is ActionKind.FORWARD]
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 300:
        point = (float(rng.uniform(0.0, world.width)), float(rng.uniform(0.0, world.height)))
        if not is_free(world, point, radius):
            continue
        pose = Pose(point[0], point[1], float(rng.uniform(-math.pi, math.pi)))
        outcome = apply_action(world, pose, moves[int(rng.integers(len(moves)))], radius)
        x, y = outcome.new_pose.point
        assert clearance(world, (x, y)) >= radius - 1e-6
        assert radius - 1e-6 <= x <= world.width - radius + 1e-6
        assert radius - 1e-6 <= y <= world.height - radius + 1e-6
        checked += 1


def test_rotation_changes_heading_only():
    pose = Pose(5.0, 5.0, 3.0)
    outcome = apply_action(box_world(), pose, Action(ActionKind.ROTATE, 0.5))
    assert outcome.new_pose.point == pose.point
    assert outcome.new_pose.theta == pytest.approx(3.5 - 2 * math.pi)
    assert outcome.distance_traveled == 0.0


def test_negative_forward_move_is_rejected():
    with pytest.raises(ValueError):
        apply_action(box_world(), Pose(5.0, 5.0, 0.0), Action(ActionKind.FORWARD, -0.1))


def test_contact_distance_against_a_segment_end_on():
    wall = np.array([[2.0, -1.0, 2.0, 1.0]])
    assert contact_distance(wall, (0.0, 0.0), 0.0, 0.4) == pytest.approx(1.6)


def test_contact_distance_ignores_receding_walls():
    wall = np.array([[0.0, -1.0, 0.0, 1.0]])
    assert contact_distance(wall, (0.2, 0.0), 0.0, 0.4) == math.inf


def test_contact_distance_grazing_an_endpoint():
    wall = np.array([[2.0, 0.2, 2.0, 3.0]])
    # The disc meets the endpoint (2, 0.2) when |(t, 0) - (2, 0.2)| = 0.4
    assert contact_distance(wall, (0.0, 0.0), 0.0, 0.4) == pytest.approx(2.0 - math.sqrt(0.12))


def test_action_duration_uses_distance_actually_traveled():
    world = box_world()
    forward = Action(ActionKind.FORWARD, 0.8)
    outcome = apply_action(world, Pose(9.0, 5.0, 0.0), forward)
    assert action_duration(forward, outcome) == pytest.approx(0.6)
    turn = Action(ActionKind.ROTATE, -1.57)
    assert action_duration(turn, apply_action(world, Pose(5.0, 5.0, 0.0), turn)) == pytest.approx(1.57)


def test_is_free():
    world = box_world()
    assert is_free(world, (5.0, 5.0), 0.4)
    assert not is_free(world, (0.3, 5.0), 0.4)


def test_load_world_reads_every_record():
    world = load_world("""
    # a small room
    name small
    bounds 6 4
    start 1 1 0.5
    wall 0.5 0.5 5.5 0.5   # floor
    wall 5.5 0.5 5.5 3.5
    corridor 1 2 5 2
    """)
    assert world.name == "small"
    assert (world.width, world.height) == (6.0, 4.0)
    assert world.start == Pose(1.0, 1.0, 0.5)
    assert len(world.walls) == 2
    assert world.corridors == ((1.0, 2.0, 5.0, 2.0),)


def test_serialized_world_loads_back():
    assert load_world(serialize_world(box_world())) == box_world()
    world = corridor_h_world()
    loaded = load_world(serialize_world(world))
    assert loaded.walls == world.walls
    assert loaded.corridors == world.corridors
    assert loaded.start.theta == pytest.approx(world.start.theta, abs=1e-6)


@pytest.mark.parametrize(
    "text,line_number",
    [
        ("bounds 5 5\nwall 0 0 1", 2),
        ("bounds 5 5\ndoor 0 0 1 1", 2),
        ("bounds 5 5\nwall 0 0 one 1", 2),
        ("bounds 5 5\nwall 0 0 nan 1", 2),
        ("bounds 5 5\n\nbounds 6 6\nwall 0 0 1 1", 3),
    ]
)
def test_load_world_parse_errors_carry_the_line(text, line_number):
    with pytest.raises(WorldParseError) as e:
        load_world(text)
    assert e.value.line_number == line_number


@pytest.mark.parametrize(
    "text",
    [
        "wall 0 0 1 1",
        "bounds 5 5",
        "bounds 5 5\nwall 0 0 6 1",
        "bounds 5 5\nwall 1 1 1 1",
        "bounds 0 5\nwall 0 0 0 1",
        "bounds 5 5\nwall 0 0 1 1\nstart 7 1 0",
    ]
)
def test_load_world_validation_errors(text):
    with pytest.raises(WorldValidationError):
        load_world(text)


def test_world_is_hashable_for_caching():
    assert hash(box_world()) == hash(box_world())
    assert isinstance(box_world(), World)
