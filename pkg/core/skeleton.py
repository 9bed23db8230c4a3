"""
Skeleton: non-overlapping circular regions built from decision points, joined by edges
labeled with the shortest observed transition between them.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx
import numpy as np

import core.constants as constants
from core.errors import ArtifactError, UnknownRegionError
from core.utils import Point, distance, format_number, logger, point_segment_distance
from core.world import Pose, View


@dataclass
class Region:
    id: int
    center: Point
    radius: float
    passage_id: Optional[int] = None
    visible_targets: set = field(default_factory=set)

    def contains(self, point: Point) -> bool:
        return distance(point, self.center) <= self.radius + constants.EPSILON


@dataclass(frozen=True)
class SkeletonEdge:
    """Edge between regions a < b; point_a lies on a's circle and point_b on b's."""
    a: int
    b: int
    distance: float
    point_a: Point
    point_b: Point
    midpoint: Point

    def endpoints_from(self, region_id: int) -> tuple[Point, Point]:
        """(exit, entry) when travelling away from `region_id`."""
        if region_id == self.a:
            return self.point_a, self.point_b
        return self.point_b, self.point_a


class Skeleton:
    def __init__(self):
        self.graph = nx.Graph()
        self.last_region: Optional[int] = None
        self.points_of_interest: list[Point] = []
        self._trail: list[Point] = []
        self._recent_hits: deque[np.ndarray] = deque(maxlen=constants.REGION_MEMORY_VIEWS)
        self._next_id = 0

    @property
    def regions(self) -> dict[int, Region]:
        return {rid: data["region"] for rid, data in sorted(self.graph.nodes(data=True))}

    def region(self, region_id: int) -> Region:
        if region_id not in self.graph:
            raise UnknownRegionError(region_id)
        return self.graph.nodes[region_id]["region"]

    def edge(self, a: int, b: int) -> Optional[SkeletonEdge]:
        if not self.graph.has_edge(a, b):
            return None
        return self.graph.edges[a, b]["edge"]

    def edges(self) -> list[SkeletonEdge]:
        return sorted((data["edge"] for _, _, data in self.graph.edges(data=True)), key=lambda e: (e.a, e.b))

    def __len__(self):
        return self.graph.number_of_nodes()

    def add_region(self, center: Point, radius: float, passage_id: Optional[int] = None) -> Region:
        region = Region(self._next_id, (float(center[0]), float(center[1])), float(radius), passage_id)
        self.graph.add_node(region.id, region=region)
        self._next_id += 1
        return region

    def set_edge(self, edge: SkeletonEdge) -> bool:
        """Stores the edge unless a shorter one already joins the same pair."""
        if edge.a == edge.b:
            raise ValueError("skeleton edges join distinct regions")
        current = self.edge(edge.a, edge.b)
        if current is not None and current.distance <= edge.distance:
            return False
        self.graph.add_edge(edge.a, edge.b, edge=edge)
        return True

    def register_point_of_interest(self, point: Point) -> None:
        point = (float(point[0]), float(point[1]))
        if point not in self.points_of_interest:
            self.points_of_interest.append(point)


def region_at(skeleton: Skeleton, point: Point) -> Optional[int]:
    """The region whose closed disc contains `point`, or None."""
    for rid, region in skeleton.regions.items():
        if region.contains(point):
            return rid
    return None


def degree(skeleton: Skeleton, region_id: int) -> int:
    if region_id not in skeleton.graph:
        raise UnknownRegionError(region_id)
    return skeleton.graph.degree[region_id]


def view_hits(view: View) -> np.ndarray:
    """Wall points struck by the view's rays, shaped (n, 2)."""
    hit = view.ranges < view.max_range
    angles = view.absolute_angles[hit]
    ranges = view.ranges[hit]
    return np.column_stack([view.pose.x + ranges * np.cos(angles), view.pose.y + ranges * np.sin(angles)])


def nearest_recent_hit(skeleton: Skeleton, point: Point) -> float:
    """Distance from `point` to the closest wall hit in the remembered views."""
    if not skeleton._recent_hits:
        return math.inf
    hits = np.concatenate(list(skeleton._recent_hits))
    if not len(hits):
        return math.inf
    return float(np.hypot(hits[:, 0] - point[0], hits[:, 1] - point[1]).min())


def view_detects(view: View, point: Point, tolerance: float = constants.VISIBILITY_TOLERANCE_M) -> bool:
    """True when some ray of the view passes within `tolerance` of `point` and reaches it."""
    dx, dy = point[0] - view.pose.x, point[1] - view.pose.y
    angles = view.absolute_angles
    along = dx * np.cos(angles) + dy * np.sin(angles)
    lateral = np.abs(-dx * np.sin(angles) + dy * np.cos(angles))
    return bool(np.any((along >= 0) & (lateral <= tolerance) & (view.ranges >= along)))


########################################################################
#############  Transitions between regions #############################
########################################################################

def _circle_crossing(p0: Point, p1: Point, center: Point, radius: float, leaving: bool) -> Point:
    """Point where segment p0->p1 crosses a circle; the far root when leaving it."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    fx, fy = p0[0] - center[0], p0[1] - center[1]
    a = dx * dx + dy * dy
    if a == 0.0:
        return p0
    b = 2 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - radius * radius
    root = math.sqrt(max(b * b - 4 * a * c, 0.0))
    t = (-b + root) / (2 * a) if leaving else (-b - root) / (2 * a)
    t = min(max(t, 0.0), 1.0)
    return (p0[0] + t * dx, p0[1] + t * dy)


def _transition(trail: list[Point], old: Region, new: Region) -> Optional[tuple[float, Point, Point, Point]]:
    """(distance, exit, entry, midpoint) of the trail leaving `old` and entering `new`."""
    inside_old = [old.contains(p) for p in trail]
    inside_new = [new.contains(p) for p in trail]

    exit_index = None
    for i in range(len(trail) - 2, -1, -1):
        if inside_old[i] and not inside_old[i + 1]:
            exit_index = i
            break
    if exit_index is None:
        return None
    entry_index = None
    for j in range(exit_index, len(trail) - 1):
        if not inside_new[j] and inside_new[j + 1]:
            entry_index = j
            break
    if entry_index is None:
        return None

    exit_point = _circle_crossing(trail[exit_index], trail[exit_index + 1], old.center, old.radius, leaving=True)
    entry_start = exit_point if entry_index == exit_index else trail[entry_index]
    entry_point = _circle_crossing(entry_start, trail[entry_index + 1], new.center, new.radius, leaving=False)

    path = [exit_point] + trail[exit_index + 1:entry_index + 1] + [entry_point]
    length = sum(distance(a, b) for a, b in zip(path, path[1:]))
    if length <= 0.0:
        return None

    target = ((exit_point[0] + entry_point[0]) / 2, (exit_point[1] + entry_point[1]) / 2)
    midpoint, best = path[0], math.inf
    for a, b in zip(path, path[1:]):
        d = point_segment_distance(target, a, b)
        if d < best - constants.EPSILON:
            best = d
            abx, aby = b[0] - a[0], b[1] - a[1]
            length_sq = abx * abx + aby * aby
            t = 0.0 if length_sq == 0 else ((target[0] - a[0]) * abx + (target[1] - a[1]) * aby) / length_sq
            t = min(max(t, 0.0), 1.0)
            midpoint = (a[0] + t * abx, a[1] + t * aby)
    return length, exit_point, entry_point, midpoint


def observe_decision(skeleton: Skeleton, pose: Pose, view: View, passage_id: Optional[int] = None) -> Optional[int]:
    """
    Records one decision point: finds or builds the region under the pose, caches
    visible points of interest, and labels the edge from the previous region.
    Returns the current region id, or None when the pose lies in no region.
    """
    point = pose.point
    skeleton._trail.append(point)
    skeleton._recent_hits.append(view_hits(view))

    current = region_at(skeleton, point)
    if current is None:
        # The view misses what lies behind the robot; earlier views fill that arc
        radius = min(float(view.ranges.min()), nearest_recent_hit(skeleton, point), constants.REGION_RADIUS_CAP_M)
        for region in skeleton.regions.values():
            radius = min(radius, distance(point, region.center) - region.radius - constants.REGION_GAP_M)
        if radius >= constants.REGION_RADIUS_MIN_M:
            current = skeleton.add_region(point, radius, passage_id).id
            logger.debug(f"Region {current} at ({point[0]:.2f}, {point[1]:.2f}) radius {radius:.2f}")

    if current is None:
        return None

    region = skeleton.region(current)
    for poi in skeleton.points_of_interest:
        if poi not in region.visible_targets and view_detects(view, poi):
            region.visible_targets.add(poi)

    previous = skeleton.last_region
    if previous is not None and previous != current:
        transition = _transition(skeleton._trail, skeleton.region(previous), region)
        if transition is not None:
            length, exit_point, entry_point, midpoint = transition
            if previous < current:
                edge = SkeletonEdge(previous, current, length, exit_point, entry_point, midpoint)
            else:
                edge = SkeletonEdge(current, previous, length, entry_point, exit_point, midpoint)
            skeleton.set_edge(edge)

    skeleton.last_region = current
    skeleton._trail = [point]
    return current


########################################################################
#############  Serialization ###########################################
########################################################################

def serialize_skeleton(skeleton: Skeleton) -> str:
    lines = []
    for rid, r in skeleton.regions.items():
        pid = "-" if r.passage_id is None else str(r.passage_id)
        lines.append(f"region {rid} {format_number(r.center[0])} {format_number(r.center[1])} "
                     f"{format_number(r.radius)} {pid}")
    for e in skeleton.edges():
        values = (e.distance, *e.point_a, *e.point_b, *e.midpoint)
        lines.append(f"edge {e.a} {e.b} " + " ".join(format_number(v) for v in values))
    return "\n".join(lines) + "\n"


def parse_skeleton(text: str) -> Skeleton:
    skeleton = Skeleton()
    pending_edges = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            if tokens[0] == "region" and len(tokens) == 6:
                rid = int(tokens[1])
                pid = None if tokens[5] == "-" else int(tokens[5])
                region = Region(rid, (float(tokens[2]), float(tokens[3])), float(tokens[4]), pid)
                skeleton.graph.add_node(rid, region=region)
                skeleton._next_id = max(skeleton._next_id, rid + 1)
            elif tokens[0] == "edge" and len(tokens) == 10:
                v = [float(t) for t in tokens[3:]]
                pending_edges.append(SkeletonEdge(int(tokens[1]), int(tokens[2]), v[0],
                                                  (v[1], v[2]), (v[3], v[4]), (v[5], v[6])))
            else:
                raise ArtifactError(f"line {line_number}: expected a region or edge record")
        except ValueError as e:
            if isinstance(e, ArtifactError):
                raise
            raise ArtifactError(f"line {line_number}: malformed number") from e
    for edge in pending_edges:
        if edge.a not in skeleton.graph or edge.b not in skeleton.graph:
            raise ArtifactError(f"edge {edge.a}-{edge.b} references an unknown region")
        skeleton.set_edge(edge)
    return skeleton
