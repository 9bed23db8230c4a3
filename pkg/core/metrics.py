"""Model coverage measures and the per-system aggregate of experiment runs."""

import dataclasses
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import pandas as pd

import core.constants as constants
from core.grid_planner import free_space_mask, reachable_at
from core.passage_grid import Cell, PassageGrid, traverse_cells
from core.skeleton import Skeleton, region_at
from core.world import World, is_free


@lru_cache(maxsize=16)
def free_cells(world: World, cell: float = constants.PASSAGE_CELL_M,
               radius: float = constants.ROBOT_RADIUS_M) -> tuple[Cell, ...]:
    """1 m cells whose center admits the robot and lies in free space reachable from the start."""
    reachable = free_space_mask(world, constants.FREE_SPACE_CELL_M, radius)
    columns = max(1, math.ceil(world.width / cell - constants.EPSILON))
    rows = max(1, math.ceil(world.height / cell - constants.EPSILON))
    cells = []
    for i in range(columns):
        for j in range(rows):
            center = ((i + 0.5) * cell, (j + 0.5) * cell)
            if is_free(world, center, radius) and reachable_at(reachable, center, constants.FREE_SPACE_CELL_M):
                cells.append((i, j))
    return tuple(cells)


def coverage(grid: PassageGrid, skeleton: Skeleton, world: World) -> float:
    """Fraction of free cells that are Passage-labeled or whose center lies in a region."""
    free = free_cells(world, grid.cell_size)
    if not free:
        return 0.0
    covered = sum(
        1 for cell in free
        if grid.is_passage(cell) or region_at(skeleton, grid.center(cell)) is not None
    )
    return covered / len(free)


def corridor_cells(world: World, grid: PassageGrid) -> list[list[Cell]]:
    """Cells along each designed corridor axis, in order, without repeats."""
    result = []
    for x1, y1, x2, y2 in world.corridors:
        cells = []
        for cell in traverse_cells((x1, y1), (x2, y2), grid.cell_size):
            if grid.in_bounds(cell) and cell not in cells:
                cells.append(cell)
        result.append(cells)
    return result


def hallway_coverage(grid: PassageGrid, world: World) -> list[float]:
    """Per designed corridor, the fraction of its axis cells labeled Passage."""
    return [
        sum(grid.is_passage(c) for c in cells) / len(cells) if cells else 0.0
        for cells in corridor_cells(world, grid)
    ]


def passage_frequency(grids: Iterable[PassageGrid]) -> dict[Cell, float]:
    """Per cell, the share of grids in which it was labeled Passage."""
    counts = Counter()
    total = 0
    for grid in grids:
        total += 1
        counts.update(grid.passage_cells())
    if total == 0:
        return {}
    return {cell: n / total for cell, n in sorted(counts.items())}


########################################################################
#############  Aggregation #############################################
########################################################################

@dataclass(frozen=True)
class MetricsReport:
    system: str
    runs: int
    failed_runs: int
    success_rate: float
    travel_time_tasks: float
    travel_time_total: float
    distance_tasks: float
    distance_total: float
    initial_coverage: float
    final_coverage: float
    heuristic_decision_fraction: float
    skeleton_vertices: float
    skeleton_edges: float
    hallway_coverage: float
    retry_success_rate: float
    mean_planning_time: float = float("nan")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def summarize_runs(runs: pd.DataFrame, timing: pd.DataFrame = None) -> dict[str, MetricsReport]:
    """
    Averages the per-run rows of each system, leaving failed runs out of every mean.
    Systems keep the order in which they first appear.
    """
    reports = {}
    for system in pd.unique(runs["system"]):
        rows = runs[runs["system"] == system]
        ok = rows[~rows["failed"].astype(bool)]

        def mean(column: str) -> float:
            return float(ok[column].mean()) if len(ok) else float("nan")

        attempts = ok["retry_attempts"].sum() if len(ok) else 0
        retry_rate = float(ok["retry_reached"].sum() / attempts) if attempts else float("nan")

        planning = float("nan")
        if timing is not None and len(timing):
            selected = timing[(timing["system"] == system) & (timing["plans_made"] > 0)]
            if len(selected):
                planning = float(selected["planning_time"].sum() / selected["plans_made"].sum())

        reports[system] = MetricsReport(
            system=system,
            runs=len(rows),
            failed_runs=int(len(rows) - len(ok)),
            success_rate=mean("success_rate"),
            travel_time_tasks=mean("travel_time_tasks"),
            travel_time_total=mean("travel_time_total"),
            distance_tasks=mean("distance_tasks"),
            distance_total=mean("distance_total"),
            initial_coverage=mean("initial_coverage"),
            final_coverage=mean("final_coverage"),
            heuristic_decision_fraction=mean("heuristic_fraction"),
            skeleton_vertices=mean("skeleton_vertices"),
            skeleton_edges=mean("skeleton_edges"),
            hallway_coverage=mean("hallway_coverage"),
            retry_success_rate=retry_rate,
            mean_planning_time=planning,
        )
    return reports
