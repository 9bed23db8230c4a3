"""A* planning on the skeleton and expansion of region paths into waypoints."""

import enum
import heapq
import time
from dataclasses import dataclass, field
from typing import Optional

import core.constants as constants
from core.errors import ArtifactError, NoModelError, UnknownRegionError, UnreachableError
from core.skeleton import Skeleton, degree, region_at
from core.utils import Point, distance, format_number, logger


class WaypointStatus(enum.Enum):
    PENDING = "Pending"
    VISITED = "Visited"
    SKIPPED = "Skipped"


@dataclass
class Plan:
    target: Point
    waypoints: list[Point] = field(default_factory=list)
    region_path: list[int] = field(default_factory=list)
    statuses: list[WaypointStatus] = field(default_factory=list)
    failure: Optional[str] = None
    planning_time: float = 0.0

    def __post_init__(self):
        if not self.statuses:
            self.statuses = [WaypointStatus.PENDING] * len(self.waypoints)

    def pending(self) -> list[int]:
        return [k for k, s in enumerate(self.statuses) if s is WaypointStatus.PENDING]

    @property
    def exhausted(self) -> bool:
        return not self.pending()

    def mark(self, index: int, status: WaypointStatus) -> None:
        # Statuses only move away from Pending
        if self.statuses[index] is WaypointStatus.PENDING:
            self.statuses[index] = status


def attachment_score(dist: float, region_degree: int) -> float:
    return constants.ATTACH_DISTANCE_WEIGHT * dist + region_degree


def attach_point(skeleton: Skeleton, p: Point) -> int:
    """
    Region to plan from or to: the region containing `p`, else the nearest region that has
    seen `p`, else the region maximizing -5 * distance + degree (ties to the lower id).

    Raises:
        NoModelError: the skeleton has no regions.
    """
    regions = skeleton.regions
    if not regions:
        raise NoModelError("skeleton has no regions")
    inside = region_at(skeleton, p)
    if inside is not None:
        return inside

    key = (float(p[0]), float(p[1]))
    seen = [r for r in regions.values() if key in r.visible_targets]
    if seen:
        return min(seen, key=lambda r: (distance(p, r.center), r.id)).id

    return max(regions.values(),
               key=lambda r: (attachment_score(distance(p, r.center), degree(skeleton, r.id)), -r.id)).id


def edge_cost(skeleton: Skeleton, a: int, b: int) -> float:
    edge = skeleton.edge(a, b)
    return edge.distance + skeleton.region(a).radius + skeleton.region(b).radius


def plan_regions(skeleton: Skeleton, start: int, goal: int) -> list[int]:
    """
    A* over regions: edge cost is the transition label plus both radii, the heuristic is
    the straight-line distance between centers. Ties expand the smaller region id first.

    Raises:
        UnknownRegionError: either id is not in the skeleton.
        UnreachableError: no path joins the two regions.
    """
    for rid in (start, goal):
        if rid not in skeleton.graph:
            raise UnknownRegionError(rid)
    goal_center = skeleton.region(goal).center

    def h(rid: int) -> float:
        return distance(skeleton.region(rid).center, goal_center)

    g = {start: 0.0}
    parents = {start: None}
    frontier = [(h(start), start)]
    closed = set()
    while frontier:
        _, current = heapq.heappop(frontier)
        if current in closed:
            continue
        if current == goal:
            path = [goal]
            while parents[path[-1]] is not None:
                path.append(parents[path[-1]])
            return path[::-1]
        closed.add(current)
        for neighbor in sorted(skeleton.graph.neighbors(current)):
            if neighbor in closed:
                continue
            cost = g[current] + edge_cost(skeleton, current, neighbor)
            if cost < g.get(neighbor, float("inf")) - constants.EPSILON:
                g[neighbor] = cost
                parents[neighbor] = current
                heapq.heappush(frontier, (cost + h(neighbor), neighbor))
    raise UnreachableError(f"no skeleton path from region {start} to region {goal}")


def _same_point(a: Point, b: Point) -> bool:
    return distance(a, b) <= constants.EPSILON


def expand_waypoints(skeleton: Skeleton, region_path: list[int], robot: Point, target: Point) -> Plan:
    """
    Interleaves region centers with each edge's exit point, midpoint and entry point.
    The robot's position and the target are not waypoints.
    """
    if not region_path:
        raise ValueError("region_path must not be empty")
    waypoints = [skeleton.region(region_path[0]).center]
    for a, b in zip(region_path, region_path[1:]):
        edge = skeleton.edge(a, b)
        if edge is None:
            raise UnreachableError(f"regions {a} and {b} are not adjacent")
        region_a = skeleton.region(a)
        # Orient the stored endpoints by the circle each lies on
        gap_a = abs(distance(edge.point_a, region_a.center) - region_a.radius)
        gap_b = abs(distance(edge.point_b, region_a.center) - region_a.radius)
        exit_point, entry_point = (edge.point_a, edge.point_b) if gap_a <= gap_b else (edge.point_b, edge.point_a)
        waypoints += [exit_point, edge.midpoint, entry_point, skeleton.region(b).center]

    collapsed = [waypoints[0]]
    for w in waypoints[1:]:
        if not _same_point(collapsed[-1], w):
            collapsed.append(w)
    return Plan(target=target, waypoints=collapsed, region_path=list(region_path))


def make_plan(skeleton: Skeleton, robot: Point, target: Point) -> Plan:
    """
    Attaches robot and target to regions and plans between them. A skeleton that cannot
    host a plan yields an empty plan with the failure recorded.
    """
    started = time.perf_counter()
    try:
        start = attach_point(skeleton, robot)
        goal = attach_point(skeleton, target)
        plan = expand_waypoints(skeleton, plan_regions(skeleton, start, goal), robot, target)
    except (NoModelError, UnreachableError) as e:
        plan = Plan(target=target, failure=type(e).__name__)
        logger.debug(f"No plan to {target}: {e}")
    plan.planning_time = time.perf_counter() - started
    return plan


def serialize_plan(plan: Plan) -> str:
    lines = ["regions " + " ".join(str(r) for r in plan.region_path)]
    for k, (w, s) in enumerate(zip(plan.waypoints, plan.statuses)):
        lines.append(f"waypoint {k} {format_number(w[0])} {format_number(w[1])} {s.value}")
    return "\n".join(lines) + "\n"


def parse_plan(text: str) -> Plan:
    region_path, waypoints, statuses = [], [], []
    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            if tokens[0] == "regions":
                region_path = [int(t) for t in tokens[1:]]
            elif tokens[0] == "waypoint" and len(tokens) == 5:
                waypoints.append((float(tokens[2]), float(tokens[3])))
                statuses.append(WaypointStatus(tokens[4]))
            else:
                raise ArtifactError(f"line {line_number}: expected a regions or waypoint record")
        except ValueError as e:
            if isinstance(e, ArtifactError):
                raise
            raise ArtifactError(f"line {line_number}: malformed plan record") from e
    target = waypoints[-1] if waypoints else (0.0, 0.0)
    return Plan(target=target, waypoints=waypoints, region_path=region_path, statuses=statuses)
