"""
Passage grid (1 m label raster) and passage network (graph over labeled cells).

A cell is Unlabeled, Obstructed, or Passage(id). The first label a cell receives is kept.
"""

import math
from collections import Counter, deque
from typing import Iterable, Optional

import networkx as nx
import numpy as np

import core.constants as constants
from core.errors import ArtifactError, UnreachableError
from core.utils import Point, bearing, distance
from core.world import Pose, View

Cell = tuple[int, int]

OBSTRUCTED = -1
_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"
_HIT_NUDGE_M = 1e-4


class PassageGrid:
    def __init__(self, width: float, height: float, cell_size: float = constants.PASSAGE_CELL_M):
        self.cell_size = cell_size
        self.columns = max(1, math.ceil(width / cell_size - constants.EPSILON))
        self.rows = max(1, math.ceil(height / cell_size - constants.EPSILON))
        self.cells: dict[Cell, int] = {}

    def cell_of(self, point: Point) -> Cell:
        i = int(math.floor(point[0] / self.cell_size))
        j = int(math.floor(point[1] / self.cell_size))
        return (min(max(i, 0), self.columns - 1), min(max(j, 0), self.rows - 1))

    def center(self, cell: Cell) -> Point:
        return ((cell[0] + 0.5) * self.cell_size, (cell[1] + 0.5) * self.cell_size)

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.columns and 0 <= cell[1] < self.rows

    def label(self, cell: Cell) -> Optional[int]:
        return self.cells.get(cell)

    def is_obstructed(self, cell: Cell) -> bool:
        return self.cells.get(cell) == OBSTRUCTED

    def is_passage(self, cell: Cell) -> bool:
        return self.cells.get(cell, OBSTRUCTED) >= 0

    def set_passage(self, cell: Cell, passage_id: int) -> bool:
        """Labels an unlabeled cell; returns True when the label is new."""
        if passage_id < 0:
            raise ValueError("passage ids are non-negative")
        if cell in self.cells or not self.in_bounds(cell):
            return False
        self.cells[cell] = passage_id
        return True

    def set_obstructed(self, cell: Cell) -> bool:
        if cell in self.cells or not self.in_bounds(cell):
            return False
        self.cells[cell] = OBSTRUCTED
        return True

    def passage_cells(self) -> list[Cell]:
        return sorted(c for c, v in self.cells.items() if v >= 0)

    def obstructed_cells(self) -> list[Cell]:
        return sorted(c for c, v in self.cells.items() if v == OBSTRUCTED)


class PassageNetwork:
    """Undirected graph over Passage cells; vertices carry a `passage_id` attribute."""

    def __init__(self):
        self.graph = nx.Graph()

    def add_vertex(self, cell: Cell, passage_id: int) -> None:
        if cell not in self.graph:
            self.graph.add_node(cell, passage_id=passage_id)

    def add_edge(self, a: Cell, b: Cell) -> bool:
        if a == b or a not in self.graph or b not in self.graph or self.graph.has_edge(a, b):
            return False
        self.graph.add_edge(a, b)
        return True

    def __contains__(self, cell: Cell) -> bool:
        return cell in self.graph

    def vertices(self) -> list[Cell]:
        return sorted(self.graph.nodes)

    def edges(self) -> list[tuple[Cell, Cell]]:
        return sorted(tuple(sorted(e)) for e in self.graph.edges)

    def nearest_vertex(self, point: Point, cell_size: float = constants.PASSAGE_CELL_M) -> Optional[Cell]:
        """Vertex whose cell center is closest to `point`; ties go to the smaller cell."""
        best, best_d = None, math.inf
        for cell in self.vertices():
            d = distance(point, ((cell[0] + 0.5) * cell_size, (cell[1] + 0.5) * cell_size))
            if d < best_d - constants.EPSILON:
                best, best_d = cell, d
        return best


def traverse_cells(start: Point, end: Point, cell_size: float = constants.PASSAGE_CELL_M) -> list[Cell]:
    """
    Cells a segment passes through, in order (exact grid traversal). Crossing a cell
    corner exactly steps diagonally.
    """
    i, j = int(math.floor(start[0] / cell_size)), int(math.floor(start[1] / cell_size))
    cells = [(i, j)]
    dx, dy = end[0] - start[0], end[1] - start[1]
    if abs(dx) < constants.EPSILON and abs(dy) < constants.EPSILON:
        return cells

    step_i = 1 if dx > 0 else -1
    step_j = 1 if dy > 0 else -1
    if abs(dx) < constants.EPSILON:
        t_max_x, t_delta_x = math.inf, math.inf
    else:
        boundary = (i + (1 if dx > 0 else 0)) * cell_size
        t_max_x, t_delta_x = (boundary - start[0]) / dx, cell_size / abs(dx)
    if abs(dy) < constants.EPSILON:
        t_max_y, t_delta_y = math.inf, math.inf
    else:
        boundary = (j + (1 if dy > 0 else 0)) * cell_size
        t_max_y, t_delta_y = (boundary - start[1]) / dy, cell_size / abs(dy)

    while True:
        t_next = min(t_max_x, t_max_y)
        if t_next >= 1.0 - constants.EPSILON:
            break
        if abs(t_max_x - t_max_y) <= constants.EPSILON:
            i, j = i + step_i, j + step_j
            t_max_x += t_delta_x
            t_max_y += t_delta_y
        elif t_max_x < t_max_y:
            i += step_i
            t_max_x += t_delta_x
        else:
            j += step_j
            t_max_y += t_delta_y
        cells.append((i, j))
    return cells


########################################################################
#############  Labeling ################################################
########################################################################

def is_unobstructed(hits: int, passes: int) -> bool:
    return hits / (hits + passes) <= constants.OCCUPANCY_RATIO


def _count_hits_and_passes(grid: PassageGrid, view: View, reach: float) -> tuple[Counter, Counter]:
    hits, passes = Counter(), Counter()
    origin = view.pose.point
    for rng, angle in zip(view.ranges, view.absolute_angles):
        terminal_hit = rng < view.max_range and rng <= reach
        # A hit ends just past the wall so it lands in the cell behind a wall on a cell border
        length = float(rng) + _HIT_NUDGE_M if terminal_hit else min(float(rng), reach)
        end = (origin[0] + length * math.cos(angle), origin[1] + length * math.sin(angle))
        cells = [c for c in traverse_cells(origin, end, grid.cell_size) if grid.in_bounds(c)]
        if not cells:
            continue
        for cell in cells[:-1]:
            passes[cell] += 1
        if terminal_hit:
            hits[cells[-1]] += 1
        else:
            passes[cells[-1]] += 1
    return hits, passes


def update_occupancy(grid: PassageGrid, network: PassageNetwork, view: View, passage_id: int) -> list[Cell]:
    """
    Occupancy mapping from one view. A cell is unobstructed in this view when
    hits / (hits + passes) <= 0.5. Unobstructed cells beside the robot become Passage
    cells, obstructed cells nearby become Obstructed. Returns the new Passage cells.
    """
    reach = constants.OBSTRUCTED_LABEL_M + 1.5 * grid.cell_size
    hits, passes = _count_hits_and_passes(grid, view, reach)
    lateral_low, lateral_high = (math.radians(a) for a in constants.LATERAL_SECTOR_DEG)

    unobstructed = set()
    labeled = []
    for cell in sorted(set(hits) | set(passes)):
        h, p = hits[cell], passes[cell]
        center = grid.center(cell)
        d = distance(center, view.pose.point)
        if is_unobstructed(h, p):
            unobstructed.add(cell)
            side = abs(bearing(view.pose.point, view.pose.theta, center))
            if (d <= constants.PASSAGE_ADJACENT_M
                    and lateral_low - constants.EPSILON <= side <= lateral_high + constants.EPSILON
                    and grid.set_passage(cell, passage_id)):
                network.add_vertex(cell, passage_id)
                labeled.append(cell)
        elif d <= constants.OBSTRUCTED_LABEL_M:
            grid.set_obstructed(cell)

    for cell in labeled:
        for neighbor in _neighbors8(cell):
            if neighbor in unobstructed and neighbor in network:
                network.add_edge(cell, neighbor)
    return labeled


def _neighbors8(cell: Cell) -> list[Cell]:
    i, j = cell
    return [(i + di, j + dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]


def record_travel_edge(grid: PassageGrid, network: PassageNetwork,
                       from_pose: Pose, to_pose: Pose, passage_id: int) -> None:
    """Labels each cell a successful move entered and chains consecutive cells in the network."""
    previous = None
    for cell in traverse_cells(from_pose.point, to_pose.point, grid.cell_size):
        if not grid.in_bounds(cell) or grid.is_obstructed(cell):
            previous = None
            continue
        if grid.set_passage(cell, passage_id):
            network.add_vertex(cell, passage_id)
        if previous is not None:
            network.add_edge(previous, cell)
        previous = cell


########################################################################
#############  Repositioning ###########################################
########################################################################

def bfs_cell_path(network: PassageNetwork, from_cell: Cell, to_cell: Cell) -> list[Cell]:
    """
    Fewest-edges path; neighbors are expanded in lexicographic (i, j) order.

    Raises:
        UnreachableError: either cell is not a vertex, or no path connects them.
    """
    if from_cell not in network or to_cell not in network:
        raise UnreachableError(f"{from_cell} or {to_cell} is not in the passage network")
    parents = {from_cell: None}
    queue = deque([from_cell])
    while queue:
        cell = queue.popleft()
        if cell == to_cell:
            break
        for neighbor in sorted(network.graph.neighbors(cell)):
            if neighbor not in parents:
                parents[neighbor] = cell
                queue.append(neighbor)
    if to_cell not in parents:
        raise UnreachableError(f"no passage network path from {from_cell} to {to_cell}")
    path = [to_cell]
    while parents[path[-1]] is not None:
        path.append(parents[path[-1]])
    return path[::-1]


def cells_to_waypoints(path: list[Cell], decisions: Iterable[Point],
                       cell_size: float = constants.PASSAGE_CELL_M) -> list[Point]:
    """
    Replaces each cell but the last with the recorded decision points nearest to its
    center and to the next cell's center.
    """
    points = np.asarray(list(decisions), dtype=float).reshape(-1, 2)
    if not path or len(points) == 0:
        raise ValueError("cells_to_waypoints needs a path and at least one decision point")

    def nearest(cell: Cell) -> Point:
        cx, cy = (cell[0] + 0.5) * cell_size, (cell[1] + 0.5) * cell_size
        k = int(np.argmin(np.hypot(points[:, 0] - cx, points[:, 1] - cy)))
        return (float(points[k, 0]), float(points[k, 1]))

    if len(path) == 1:
        return [nearest(path[0])]
    waypoints = []
    for cell, next_cell in zip(path, path[1:]):
        for point in (nearest(cell), nearest(next_cell)):
            if not waypoints or waypoints[-1] != point:
                waypoints.append(point)
    return waypoints


########################################################################
#############  Serialization ###########################################
########################################################################

def serialize_grid(grid: PassageGrid) -> str:
    """Text raster, top row first: '.' unlabeled, '#' obstructed, base-36 passage id."""
    rows = []
    for j in range(grid.rows - 1, -1, -1):
        row = []
        for i in range(grid.columns):
            label = grid.cells.get((i, j))
            row.append('.' if label is None else '#' if label == OBSTRUCTED else _DIGITS[label % 36])
        rows.append("".join(row))
    return "\n".join(rows) + "\n"


def parse_grid(text: str, cell_size: float = constants.PASSAGE_CELL_M) -> PassageGrid:
    rows = [r for r in text.splitlines() if r.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ArtifactError("grid raster rows must be non-empty and of equal length")
    grid = PassageGrid(len(rows[0]) * cell_size, len(rows) * cell_size, cell_size)
    for row_index, row in enumerate(rows):
        j = len(rows) - 1 - row_index
        for i, char in enumerate(row):
            if char == '#':
                grid.cells[(i, j)] = OBSTRUCTED
            elif char != '.':
                if char not in _DIGITS:
                    raise ArtifactError(f"unknown grid character '{char}'")
                grid.cells[(i, j)] = _DIGITS.index(char)
    return grid


def serialize_edges(network: PassageNetwork) -> str:
    return "".join(f"edge {a[0]} {a[1]} {b[0]} {b[1]}\n" for a, b in network.edges())


def parse_edges(text: str) -> list[tuple[Cell, Cell]]:
    edges = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] != "edge" or len(tokens) != 5:
            raise ArtifactError(f"line {line_number}: expected 'edge i1 j1 i2 j2'")
        try:
            i1, j1, i2, j2 = (int(t) for t in tokens[1:])
        except ValueError:
            raise ArtifactError(f"line {line_number}: cell indices must be integers")
        edges.append(((i1, j1), (i2, j2)))
    return edges
