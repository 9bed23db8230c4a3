import math

import pandas as pd
import pytest

from core.benchmarks import corridor_world
from core.metrics import coverage, corridor_cells, free_cells, hallway_coverage, passage_frequency, summarize_runs
from core.passage_grid import PassageGrid
from core.skeleton import Skeleton


def corridor_grid() -> PassageGrid:
    return PassageGrid(22.0, 4.0)


def test_free_cells_of_the_corridor():
    cells = free_cells(corridor_world())
    # 20 by 2 cells inside the hall; the ring outside it is not reachable from the start
    assert len(cells) == 40
    assert (1, 1) in cells and (20, 2) in cells
    assert (0, 0) not in cells


def test_coverage_counts_passage_cells_and_regions():
    world = corridor_world()
    grid = corridor_grid()
    skeleton = Skeleton()
    assert coverage(grid, skeleton, world) == 0.0

    for i in range(1, 21):
        grid.set_passage((i, 1), 0)
    assert coverage(grid, skeleton, world) == pytest.approx(0.5)

    skeleton.add_region((2.5, 2.5), 0.8)
    assert coverage(grid, skeleton, world) == pytest.approx(21 / 40)


def test_hallway_coverage():
    world = corridor_world()
    grid = corridor_grid()
    cells = corridor_cells(world, grid)[0]
    assert cells[0] == (1, 2)
    assert len(cells) == len(set(cells))

    assert hallway_coverage(grid, world) == [0.0]
    half = cells[:len(cells) // 2]
    for cell in half:
        grid.set_passage(cell, 0)
    assert hallway_coverage(grid, world) == [pytest.approx(len(half) / len(cells))]


def test_passage_frequency():
    a, b = corridor_grid(), corridor_grid()
    a.set_passage((1, 1), 0)
    a.set_passage((2, 1), 0)
    b.set_passage((1, 1), 3)
    assert passage_frequency([a, b]) == {(1, 1): 1.0, (2, 1): 0.5}
    assert passage_frequency([]) == {}


def run_row(system: str, failed: bool = False, success: float = 1.0, **values) -> dict:
    row = {
        "system": system, "failed": failed, "success_rate": success,
        "travel_time_tasks": 100.0, "travel_time_total": 150.0,
        "distance_tasks": 80.0, "distance_total": 120.0,
        "initial_coverage": 0.4, "final_coverage": 0.6, "heuristic_fraction": 0.25,
        "skeleton_vertices": 12, "skeleton_edges": 11, "hallway_coverage": 0.9,
        "retry_attempts": 0, "retry_reached": 0,
    }
    if failed:
        row.update({key: float("nan") for key in row if key not in ("system", "failed")})
    row.update(values)
    return row


def test_summary_leaves_failed_runs_out():
    runs = pd.DataFrame([
        run_row("hlc", success=1.0, retry_attempts=2, retry_reached=1),
        run_row("hlc", success=0.5, retry_attempts=2, retry_reached=2),
        run_row("hlc", failed=True),
        run_row("no-exploration", success=0.25),
    ])
    timing = pd.DataFrame([
        {"system": "hlc", "plans_made": 4, "planning_time": 0.2},
        {"system": "hlc", "plans_made": 0, "planning_time": 0.0},
        {"system": "no-exploration", "plans_made": 6, "planning_time": 0.6},
    ])
    reports = summarize_runs(runs, timing)
    assert list(reports) == ["hlc", "no-exploration"]

    hlc = reports["hlc"]
    assert hlc.runs == 3
    assert hlc.failed_runs == 1
    assert hlc.success_rate == pytest.approx(0.75)
    assert hlc.retry_success_rate == pytest.approx(0.75)
    assert hlc.mean_planning_time == pytest.approx(0.05)
    assert hlc.as_dict()["system"] == "hlc"

    ablation = reports["no-exploration"]
    assert ablation.success_rate == pytest.approx(0.25)
    assert math.isnan(ablation.retry_success_rate)
    assert ablation.mean_planning_time == pytest.approx(0.1)


def test_summary_of_only_failed_runs():
    reports = summarize_runs(pd.DataFrame([run_row("hlc", failed=True)]))
    assert reports["hlc"].failed_runs == 1
    assert math.isnan(reports["hlc"].success_rate)
    assert math.isnan(reports["hlc"].mean_planning_time)
