"""
Fine occupancy-grid view of a world: inflated free cells, the free space reachable
from the start, and the grid A* planner used as a benchmark baseline.
"""

import heapq
import math
import time
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy import ndimage

import core.constants as constants
from core.errors import UnreachableError
from core.utils import Point, distance, logger
from core.world import World

GridCell = tuple[int, int]

_CHUNK = 4096
_STEPS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def cell_centers(world: World, cell: float) -> tuple[np.ndarray, np.ndarray]:
    """X and Y center coordinates, each shaped (columns, rows)."""
    columns = max(1, int(math.ceil(world.width / cell - constants.EPSILON)))
    rows = max(1, int(math.ceil(world.height / cell - constants.EPSILON)))
    xs = (np.arange(columns) + 0.5) * cell
    ys = (np.arange(rows) + 0.5) * cell
    return np.meshgrid(xs, ys, indexing="ij")


def clearance_field(world: World, cell: float) -> np.ndarray:
    """Distance from each cell center to the nearest wall or bound edge."""
    cx, cy = cell_centers(world, cell)
    points = np.column_stack([cx.ravel(), cy.ravel()])
    segments = world.collision_array
    a = segments[:, 0:2]
    ab = segments[:, 2:4] - a
    length_sq = np.einsum('ij,ij->i', ab, ab)
    length_sq = np.where(length_sq > 0, length_sq, 1.0)

    result = np.empty(len(points))
    for start in range(0, len(points), _CHUNK):
        chunk = points[start:start + _CHUNK]
        ap = chunk[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum('nij,ij->ni', ap, ab) / length_sq, 0.0, 1.0)
        closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        result[start:start + _CHUNK] = np.hypot(chunk[:, 0, None] - closest[:, :, 0],
                                                chunk[:, 1, None] - closest[:, :, 1]).min(axis=1)
    return result.reshape(cx.shape)


def free_mask(world: World, cell: float = constants.GRID_REFERENCE_CELL_M,
              radius: float = constants.ROBOT_RADIUS_M) -> np.ndarray:
    """Cells whose center admits the robot disc."""
    return clearance_field(world, cell) >= radius


@lru_cache(maxsize=16)
def free_space_mask(world: World, cell: float = constants.FREE_SPACE_CELL_M,
                    radius: float = constants.ROBOT_RADIUS_M) -> np.ndarray:
    """
    Inflated free cells 8-connected to the start pose's cell. Worlds without a start,
    or whose start cell is blocked, keep every free cell.
    """
    reachable = free_mask(world, cell, radius)
    if world.start is not None:
        start = cell_index(world.start.point, cell, reachable.shape)
        if reachable[start]:
            labels, _ = ndimage.label(reachable, structure=np.ones((3, 3), dtype=int))
            reachable = labels == labels[start]
    reachable.setflags(write=False)
    return reachable


def cell_index(point: Point, cell: float, shape: tuple[int, int]) -> GridCell:
    i = min(max(int(math.floor(point[0] / cell)), 0), shape[0] - 1)
    j = min(max(int(math.floor(point[1] / cell)), 0), shape[1] - 1)
    return i, j


def reachable_at(mask: np.ndarray, point: Point, cell: float) -> bool:
    """True when any cell the point touches is set; a point on a cell corner touches four."""
    columns, rows = mask.shape
    xs = _touched(point[0], cell, columns)
    ys = _touched(point[1], cell, rows)
    return any(mask[i, j] for i in xs for j in ys)


def _touched(value: float, cell: float, count: int) -> set[int]:
    return {min(max(int(math.floor((value + d) / cell)), 0), count - 1)
            for d in (-constants.EPSILON, constants.EPSILON)}


def grid_neighbors(mask: np.ndarray, node: GridCell) -> Iterator[tuple[GridCell, float]]:
    """Free 8-neighbors with unit step costs; diagonals may not cut a blocked corner."""
    i, j = node
    columns, rows = mask.shape
    for di, dj in _STEPS:
        ni, nj = i + di, j + dj
        if not (0 <= ni < columns and 0 <= nj < rows) or not mask[ni, nj]:
            continue
        if di and dj and not (mask[i + di, j] and mask[i, j + dj]):
            continue
        yield (ni, nj), (math.sqrt(2.0) if di and dj else 1.0)


def _octile(a: GridCell, b: GridCell) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (math.sqrt(2.0) - 1.0) * min(dx, dy)


def grid_astar(mask: np.ndarray, start: GridCell, goal: GridCell) -> float:
    """
    Path cost in cells between two free cells.

    Raises:
        UnreachableError: either cell is blocked or no path joins them.
    """
    if not mask[start] or not mask[goal]:
        raise UnreachableError(f"grid cell {start if not mask[start] else goal} is not free")
    g = {start: 0.0}
    frontier = [(_octile(start, goal), 0.0, start)]
    closed = set()
    while frontier:
        _, cost, current = heapq.heappop(frontier)
        if current == goal:
            return cost
        if current in closed:
            continue
        closed.add(current)
        for neighbor, step in grid_neighbors(mask, current):
            candidate = cost + step
            if candidate < g.get(neighbor, math.inf) - constants.EPSILON:
                g[neighbor] = candidate
                heapq.heappush(frontier, (candidate + _octile(neighbor, goal), candidate, neighbor))
    raise UnreachableError(f"no grid path from {start} to {goal}")


def grid_reference_planner(world: World, start: Point, goal: Point,
                           cell: float = constants.GRID_REFERENCE_CELL_M,
                           radius: float = constants.ROBOT_RADIUS_M) -> tuple[float, float]:
    """
    Shortest path length in meters on the inflated grid, and the wall time the search
    took (grid construction excluded).

    Raises:
        UnreachableError: start or goal is blocked, or they are not connected.
    """
    mask = free_mask(world, cell, radius)
    a = cell_index(start, cell, mask.shape)
    b = cell_index(goal, cell, mask.shape)
    started = time.perf_counter()
    cells = grid_astar(mask, a, b)
    elapsed = time.perf_counter() - started
    a_center = ((a[0] + 0.5) * cell, (a[1] + 0.5) * cell)
    b_center = ((b[0] + 0.5) * cell, (b[1] + 0.5) * cell)
    length = distance(start, a_center) + cells * cell + distance(b_center, goal)
    logger.debug(f"Grid reference path {start} -> {goal}: {length:.2f} m in {elapsed:.4f} s")
    return length, elapsed
