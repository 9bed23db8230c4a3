"""
Ground-truth 2D world: wall segments, the range sensor and discrete robot kinematics.

Walls are line segments; ray casting and collision checks are exact and vectorized
over all walls with numpy.
"""

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

import core.constants as constants
from core.config import HLCConfig
from core.errors import DegenerateOriginError, WorldParseError, WorldValidationError
from core.utils import Point, format_number, normalize_angle, strip_comment

Segment = tuple[float, float, float, float]


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    @property
    def point(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class World:
    """
    Immutable world geometry. `start` and `corridors` are optional annotations:
    the common start pose of experiment runs and the axes of designed hallways.
    """
    width: float
    height: float
    walls: tuple[Segment, ...]
    name: str = "world"
    start: Optional[Pose] = None
    corridors: tuple[Segment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "walls", tuple(tuple(float(v) for v in w) for w in self.walls))
        object.__setattr__(self, "corridors", tuple(tuple(float(v) for v in c) for c in self.corridors))
        validate_world(self)

    @cached_property
    def wall_array(self) -> np.ndarray:
        """Walls as an (n, 4) float array of x1, y1, x2, y2."""
        return np.array(self.walls, dtype=float).reshape(-1, 4)

    @cached_property
    def collision_array(self) -> np.ndarray:
        """Walls plus the four bound edges; the robot may never leave the bounds."""
        w, h = self.width, self.height
        edges = np.array([(0, 0, w, 0), (w, 0, w, h), (w, h, 0, h), (0, h, 0, 0)], dtype=float)
        return np.vstack([self.wall_array, edges])

    def contains(self, point: Point) -> bool:
        return (-constants.EPSILON <= point[0] <= self.width + constants.EPSILON
                and -constants.EPSILON <= point[1] <= self.height + constants.EPSILON)


def validate_world(world: World) -> None:
    if world.width <= 0 or world.height <= 0:
        raise WorldValidationError("bounds width and height must be positive")
    if not world.walls:
        raise WorldValidationError("world has no walls")
    for x1, y1, x2, y2 in world.walls:
        if not (world.contains((x1, y1)) and world.contains((x2, y2))):
            raise WorldValidationError(
                f"wall ({x1}, {y1})-({x2}, {y2}) lies outside bounds {world.width}x{world.height}"
            )
        if x1 == x2 and y1 == y2:
            raise WorldValidationError(f"wall at ({x1}, {y1}) has zero length")
    for x1, y1, x2, y2 in world.corridors:
        if not (world.contains((x1, y1)) and world.contains((x2, y2))):
            raise WorldValidationError(f"corridor ({x1}, {y1})-({x2}, {y2}) lies outside bounds")
    if world.start is not None and not world.contains(world.start.point):
        raise WorldValidationError("start pose lies outside bounds")


########################################################################
#############  World file ##############################################
########################################################################

_RECORD_ARITY = {"bounds": 2, "wall": 4, "start": 3, "corridor": 4, "name": 1}


def load_world(text: str) -> World:
    """
    Parses world-file text.

    Records, one per line: `bounds <w> <h>`, `wall <x1> <y1> <x2> <y2>`, and the optional
    `name <id>`, `start <x> <y> <theta>`, `corridor <x1> <y1> <x2> <y2>`. '#' starts a comment.

    Raises:
        WorldParseError: malformed line (carries the line number).
        WorldValidationError: the parsed world violates an invariant.
    """
    bounds = None
    walls, corridors = [], []
    name, start = "world", None

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw)
        if not line:
            continue
        tokens = line.split()
        keyword, args = tokens[0], tokens[1:]
        if keyword not in _RECORD_ARITY:
            raise WorldParseError(line_number, f"unknown record '{keyword}'")
        if len(args) != _RECORD_ARITY[keyword]:
            raise WorldParseError(
                line_number, f"'{keyword}' takes {_RECORD_ARITY[keyword]} values, got {len(args)}"
            )
        if keyword == "name":
            name = args[0]
            continue
        try:
            values = [float(a) for a in args]
        except ValueError:
            raise WorldParseError(line_number, f"non-numeric value in '{line}'")
        if not all(math.isfinite(v) for v in values):
            raise WorldParseError(line_number, f"non-finite value in '{line}'")

        if keyword == "bounds":
            if bounds is not None:
                raise WorldParseError(line_number, "duplicate bounds record")
            bounds = values
        elif keyword == "wall":
            walls.append(tuple(values))
        elif keyword == "corridor":
            corridors.append(tuple(values))
        elif keyword == "start":
            start = Pose(*values)

    if bounds is None:
        raise WorldValidationError("missing bounds record")
    return World(bounds[0], bounds[1], tuple(walls), name=name, start=start, corridors=tuple(corridors))


def serialize_world(world: World) -> str:
    lines = [f"name {world.name}", f"bounds {format_number(world.width)} {format_number(world.height)}"]
    if world.start is not None:
        s = world.start
        lines.append(f"start {format_number(s.x)} {format_number(s.y)} {format_number(s.theta)}")
    for wall in world.walls:
        lines.append("wall " + " ".join(format_number(v) for v in wall))
    for corridor in world.corridors:
        lines.append("corridor " + " ".join(format_number(v) for v in corridor))
    return "\n".join(lines) + "\n"


########################################################################
#############  Range sensor ############################################
########################################################################

def wall_distances(segments: np.ndarray, point: Point) -> np.ndarray:
    """Distance from `point` to each segment of an (n, 4) array."""
    a = segments[:, 0:2]
    ab = segments[:, 2:4] - a
    ap = np.asarray(point, dtype=float) - a
    length_sq = np.einsum('ij,ij->i', ab, ab)
    t = np.clip(np.einsum('ij,ij->i', ap, ab) / np.where(length_sq > 0, length_sq, 1.0), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.hypot(point[0] - closest[:, 0], point[1] - closest[:, 1])


def clearance(world: World, point: Point) -> float:
    """Distance from `point` to the nearest wall."""
    return float(wall_distances(world.wall_array, point).min())


def is_free(world: World, point: Point, radius: float) -> bool:
    """True when a disc of `radius` at `point` is inside the bounds and touches no wall."""
    if not (radius <= point[0] <= world.width - radius and radius <= point[1] <= world.height - radius):
        return False
    return clearance(world, point) >= radius


def _check_origin(world: World, origin: Point) -> None:
    if not world.contains(origin):
        raise DegenerateOriginError(f"ray origin {origin} lies outside the world bounds")
    if clearance(world, origin) < constants.EPSILON:
        raise DegenerateOriginError(f"ray origin {origin} lies on a wall")


def cast_rays(world: World, origin: Point, angles: np.ndarray, max_range: float) -> np.ndarray:
    """
    Vectorized ray casting: distance along each absolute angle to the nearest wall,
    clamped to max_range.
    """
    _check_origin(world, origin)
    angles = np.asarray(angles, dtype=float)
    dx, dy = np.cos(angles)[:, None], np.sin(angles)[:, None]

    segs = world.wall_array
    ex, ey = segs[:, 2] - segs[:, 0], segs[:, 3] - segs[:, 1]
    wx, wy = segs[:, 0] - origin[0], segs[:, 1] - origin[1]

    # origin + t*d = a + s*e
    denom = dx * ey - dy * ex
    parallel = np.abs(denom) < constants.EPSILON
    safe = np.where(parallel, 1.0, denom)
    t = (wx * ey - wy * ex) / safe
    s = (wx * dy - wy * dx) / safe
    hit = ~parallel & (t >= 0.0) & (s >= -constants.EPSILON) & (s <= 1.0 + constants.EPSILON)
    t = np.where(hit, t, np.inf)
    return np.minimum(t.min(axis=1), max_range)


def cast_ray(world: World, origin: Point, angle: float, max_range: float = constants.MAX_RANGE_M) -> float:
    """
    Distance from `origin` along `angle` to the nearest wall, clamped to max_range.

    Raises:
        DegenerateOriginError: origin on a wall or outside the bounds.
    """
    return float(cast_rays(world, origin, np.array([angle]), max_range)[0])


@dataclass(frozen=True, eq=False)
class View:
    """
    One range scan. ranges[0] is the leftmost (counter-clockwise-most) ray; rays are
    evenly spaced over `arc` radians centered on the pose heading.
    """
    pose: Pose
    ranges: np.ndarray
    max_range: float = constants.MAX_RANGE_M
    arc: float = math.radians(constants.SENSOR_ARC_DEG)

    def __post_init__(self):
        ranges = np.array(self.ranges, dtype=float)
        ranges.setflags(write=False)
        object.__setattr__(self, "ranges", ranges)

    @cached_property
    def relative_angles(self) -> np.ndarray:
        """Ray angles relative to the heading, decreasing from +arc/2 to -arc/2."""
        return relative_ray_angles(len(self.ranges), self.arc)

    @cached_property
    def absolute_angles(self) -> np.ndarray:
        return self.pose.theta + self.relative_angles

    @property
    def angle_step(self) -> float:
        return self.arc / (len(self.ranges) - 1)

    def sector(self, low: float, high: float) -> np.ndarray:
        """Ranges of rays whose relative angle lies in [low, high] radians."""
        rel = self.relative_angles
        return self.ranges[(rel >= low - constants.EPSILON) & (rel <= high + constants.EPSILON)]

    def ray_toward(self, bearing: float) -> Optional[int]:
        """Index of the ray nearest to a relative bearing, or None outside the arc."""
        if abs(bearing) > self.arc / 2 + self.angle_step / 2:
            return None
        index = int(round((self.arc / 2 - bearing) / self.angle_step))
        return min(max(index, 0), len(self.ranges) - 1)

    def __eq__(self, other):
        if not isinstance(other, View):
            return NotImplemented
        return (self.pose == other.pose and self.max_range == other.max_range
                and self.arc == other.arc and np.array_equal(self.ranges, other.ranges))

    __hash__ = None


def relative_ray_angles(ray_count: int, arc: float) -> np.ndarray:
    return arc / 2 - np.arange(ray_count) * (arc / (ray_count - 1))


def scan(world: World, pose: Pose, config: HLCConfig = HLCConfig()) -> View:
    """Takes one range scan from `pose`; a pure function of world, pose and sensor config."""
    arc = math.radians(config.sensor_arc_deg)
    angles = pose.theta + relative_ray_angles(config.ray_count, arc)
    ranges = cast_rays(world, pose.point, angles, config.max_range)
    return View(pose, ranges, config.max_range, arc)


########################################################################
#############  Actions and kinematics ##################################
########################################################################

class ActionKind(enum.Enum):
    FORWARD = "forward"
    ROTATE = "rotate"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    magnitude: float

    def __str__(self):
        return f"{self.kind.value} {format_number(self.magnitude)}"


@dataclass(frozen=True)
class StepOutcome:
    new_pose: Pose
    truncated: bool
    distance_traveled: float


def action_set(config: HLCConfig = HLCConfig()) -> list[Action]:
    """Forward moves by ascending length, then each rotation size as +r, -r."""
    actions = [Action(ActionKind.FORWARD, m) for m in config.moves]
    for r in config.rotations:
        actions.append(Action(ActionKind.ROTATE, r))
        actions.append(Action(ActionKind.ROTATE, -r))
    return actions


def contact_distance(segments: np.ndarray, point: Point, heading: float, radius: float) -> float:
    """
    Distance a disc of `radius` can travel from `point` along `heading` before it
    touches any segment. Segments already within `radius` but receding do not block.
    """
    if len(segments) == 0:
        return math.inf
    ux, uy = math.cos(heading), math.sin(heading)
    px, py = point
    ax, ay, bx, by = segments[:, 0], segments[:, 1], segments[:, 2], segments[:, 3]
    ex, ey = bx - ax, by - ay
    length = np.hypot(ex, ey)
    nx, ny = -ey / length, ex / length

    # Side of the segment: the disc edge reaches the line at |n.(p + t u - a)| = r
    offset = nx * (px - ax) + ny * (py - ay)
    rate = nx * ux + ny * uy
    approaching = np.where(offset >= 0, rate < 0, rate > 0)
    with np.errstate(all='ignore'):
        t_side = np.where(offset >= 0, (offset - radius) / -rate, (-offset - radius) / rate)
        t_side = np.where(approaching & np.isfinite(t_side), np.maximum(t_side, 0.0), np.inf)
        cx = px + t_side * ux - ax
        cy = py + t_side * uy - ay
        along = np.where(np.isfinite(t_side), (cx * ex + cy * ey) / length, -1.0)
    t_side = np.where((along >= 0) & (along <= length), t_side, np.inf)

    # Endpoints: |p + t u - e| = r
    best = t_side.min()
    for ex_, ey_ in ((ax, ay), (bx, by)):
        qx, qy = px - ex_, py - ey_
        b = qx * ux + qy * uy
        c = qx * qx + qy * qy - radius * radius
        disc = b * b - c
        with np.errstate(invalid='ignore'):
            root = -b - np.sqrt(disc)
        valid = (disc >= 0) & (b < 0)
        root = np.where(valid, np.maximum(root, 0.0), np.inf)
        best = min(best, root.min())
    return float(best)


def apply_action(world: World, pose: Pose, action: Action,
                 robot_radius: float = constants.ROBOT_RADIUS_M) -> StepOutcome:
    """
    Rotations change the heading only. A forward move sweeps the robot disc along the
    heading and stops where it would touch a wall (or the world bounds).
    """
    if action.kind is ActionKind.ROTATE:
        return StepOutcome(Pose(pose.x, pose.y, pose.theta + action.magnitude), False, 0.0)

    if action.magnitude < 0:
        raise ValueError("forward magnitude must not be negative")
    limit = contact_distance(world.collision_array, pose.point, pose.theta, robot_radius)
    traveled = min(action.magnitude, max(limit, 0.0))
    truncated = traveled < action.magnitude
    new_pose = Pose(pose.x + traveled * math.cos(pose.theta),
                    pose.y + traveled * math.sin(pose.theta),
                    pose.theta)
    return StepOutcome(new_pose, truncated, traveled)


def action_duration(action: Action, outcome: StepOutcome, config: HLCConfig = HLCConfig()) -> float:
    """Simulated seconds an executed action takes."""
    if action.kind is ActionKind.ROTATE:
        return abs(action.magnitude) / config.angular_speed
    return outcome.distance_traveled / config.linear_speed
