"""
Experiment protocol: target lists, paired runs of the exploring system and the
travel-only ablation, and the report files that compare them.
"""

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from typing import Optional

import numpy as np
import pandas as pd
from scipy import stats

import core.constants as constants
from core.benchmarks import resolve_world
from core.classifier import RoomPassageClassifier, load_classifier
from core.config import ExperimentConfig, HLCConfig
from core.controller import DecisionSource, TaskResult, run_task
from core.errors import HLCError, WorldTooClutteredError
from core.exploration import explore, seeded_start
from core.grid_planner import free_space_mask, reachable_at
from core.metrics import MetricsReport, coverage, hallway_coverage, summarize_runs
from core.passage_grid import PassageGrid
from core.render import render_svg
from core.skeleton import Skeleton
from core.utils import Point, join_artifact_path, logger, save_artifact
from core.world import Pose, World, is_free


class System(enum.Enum):
    HLC = "hlc"
    NO_EXPLORATION = "no-exploration"


REPORT_COLUMNS = [
    "system", "task_list", "rep", "failed", "error", "targets", "reached", "success_rate",
    "travel_time_tasks", "exploration_time", "travel_time_total",
    "distance_tasks", "exploration_distance", "distance_total",
    "initial_coverage", "final_coverage", "heuristic_fraction",
    "skeleton_vertices", "skeleton_edges", "hallway_coverage",
    "retry_attempts", "retry_reached",
]
TIMING_COLUMNS = ["system", "task_list", "rep", "plans_made", "planning_time"]
COMPARED_COLUMNS = ["success_rate", "travel_time_tasks", "distance_tasks"]


def generate_targets(world: World, n: int, seed: int, radius: float = constants.ROBOT_RADIUS_M) -> list[Point]:
    """
    Samples `n` points uniformly from the world's free space, the same list for the same seed.

    Raises:
        WorldTooClutteredError: 10,000 consecutive samples were rejected.
    """
    rng = np.random.default_rng(seed)
    reachable = free_space_mask(world, constants.FREE_SPACE_CELL_M, radius)
    targets = []
    rejections = 0
    while len(targets) < n:
        point = (float(rng.uniform(0.0, world.width)), float(rng.uniform(0.0, world.height)))
        if is_free(world, point, radius) and reachable_at(reachable, point, constants.FREE_SPACE_CELL_M):
            targets.append(point)
            rejections = 0
            continue
        rejections += 1
        if rejections >= constants.TARGET_MAX_REJECTIONS:
            raise WorldTooClutteredError(
                f"{rejections} consecutive samples rejected in world '{world.name}'")
    return targets


@dataclass(frozen=True)
class RunSpec:
    system: System
    task_list: int
    rep: int
    targets: tuple[Point, ...]
    start_seed: int

    @property
    def name(self) -> str:
        return f"{self.system.value}_list{self.task_list}_rep{self.rep}"


def build_runs(config: ExperimentConfig, world: World) -> list[RunSpec]:
    """Every (system, list, rep) combination; both systems share targets and start heading."""
    systems = [System.HLC] + ([System.NO_EXPLORATION] if config.ablation else [])
    runs = []
    for t in range(config.task_lists):
        targets = tuple(generate_targets(world, config.num_tasks, config.seed * 1000 + t))
        for r in range(config.reps):
            for system in systems:
                runs.append(RunSpec(system, t, r, targets, config.seed * 1000 + t * 100 + r))
    return runs


def _run_targets(world: World, start: Pose, targets: tuple[Point, ...], skeleton: Skeleton,
                 config: HLCConfig, retry_failed: bool) -> tuple[list[TaskResult], list[TaskResult]]:
    """Visits targets in order, each from the pose the previous task ended in."""
    pose = start
    results = []
    for target in targets:
        result = run_task(world, pose, target, skeleton, config)
        results.append(result)
        pose = result.final_pose

    retries = []
    if retry_failed:
        for target, result in zip(targets, list(results)):
            if result.reached:
                continue
            retry = run_task(world, pose, target, skeleton, config)
            retries.append(retry)
            pose = retry.final_pose
    return results, retries


def run_single(spec: RunSpec, config: ExperimentConfig, world: World,
               classifier: RoomPassageClassifier) -> tuple[dict, dict, Optional[str]]:
    """One run: (report row, timing row, SVG of the final model or None when it failed)."""
    hlc = config.to_hlc_config()
    start = seeded_start(world, spec.start_seed)
    row = dict.fromkeys(REPORT_COLUMNS)
    row.update(system=spec.system.value, task_list=spec.task_list, rep=spec.rep,
               failed=False, error="", targets=len(spec.targets))
    timing = {"system": spec.system.value, "task_list": spec.task_list, "rep": spec.rep,
              "plans_made": 0, "planning_time": 0.0}

    try:
        if spec.system is System.HLC:
            exploration = explore(world, start, hlc, classifier)
            grid, skeleton = exploration.grid, exploration.skeleton
            exploration_time, exploration_distance = exploration.elapsed, exploration.distance
        else:
            grid, skeleton = PassageGrid(world.width, world.height), Skeleton()
            exploration_time, exploration_distance = 0.0, 0.0
        initial_coverage = coverage(grid, skeleton, world)
        results, retries = _run_targets(world, start, spec.targets, skeleton, hlc, config.retry_failed)
    except HLCError as e:
        logger.warning(f"Run {spec.name} failed: {type(e).__name__}: {e}")
        row.update(failed=True, error=type(e).__name__)
        return row, timing, None

    reached = sum(r.reached for r in results)
    decisions = sum(sum(r.decisions_by.values()) for r in results + retries)
    heuristic = sum(r.decisions_by[DecisionSource.HEURISTIC] for r in results + retries)
    task_time = sum(r.sim_time for r in results + retries)
    task_distance = sum(r.distance for r in results + retries)
    hallways = hallway_coverage(grid, world)
    row.update(
        reached=reached,
        success_rate=reached / len(results) if results else 0.0,
        travel_time_tasks=task_time,
        exploration_time=exploration_time,
        travel_time_total=task_time + exploration_time,
        distance_tasks=task_distance,
        exploration_distance=exploration_distance,
        distance_total=task_distance + exploration_distance,
        initial_coverage=initial_coverage,
        final_coverage=coverage(grid, skeleton, world),
        heuristic_fraction=heuristic / decisions if decisions else 0.0,
        skeleton_vertices=len(skeleton),
        skeleton_edges=len(skeleton.edges()),
        hallway_coverage=float(np.mean(hallways)) if hallways else float("nan"),
        retry_attempts=len(retries),
        retry_reached=sum(r.reached for r in retries),
    )
    timing.update(plans_made=sum(r.plans_made for r in results + retries),
                  planning_time=sum(r.planning_time for r in results + retries))
    logger.info(f"Run {spec.name}: {reached}/{len(results)} targets reached")
    svg = render_svg(world, grid=grid, skeleton=skeleton, targets=list(spec.targets))
    return row, timing, svg


def compare_systems(runs: pd.DataFrame) -> pd.DataFrame:
    """Welch t-tests between the two systems on per-run success, time and distance."""
    ok = runs[~runs["failed"].astype(bool)]
    a = ok[ok["system"] == System.HLC.value]
    b = ok[ok["system"] == System.NO_EXPLORATION.value]
    rows = []
    for column in COMPARED_COLUMNS:
        x, y = a[column].astype(float).to_numpy(), b[column].astype(float).to_numpy()
        if len(x) >= 2 and len(y) >= 2:
            p_value = float(stats.ttest_ind(x, y, equal_var=False).pvalue)
        else:
            p_value = float("nan")
        rows.append({
            "metric": column,
            "hlc_mean": float(x.mean()) if len(x) else float("nan"),
            "no_exploration_mean": float(y.mean()) if len(y) else float("nan"),
            "p_value": p_value,
            "significant": bool(not math.isnan(p_value) and p_value < constants.SIGNIFICANCE_LEVEL),
        })
    return pd.DataFrame(rows)


def _format_value(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6f}"
    return str(value)


def format_summary(config: ExperimentConfig, reports: dict[str, MetricsReport],
                   comparison: Optional[pd.DataFrame] = None) -> str:
    """Human-readable summary; simulated quantities only, so it is stable across runs."""
    lines = [
        f"world: {config.world}",
        f"seed: {config.seed}",
        f"task lists: {config.task_lists}  reps: {config.reps}  targets per list: {config.num_tasks}",
        "",
    ]
    for report in reports.values():
        lines.append(f"[{report.system}]")
        for key, value in report.as_dict().items():
            if key in ("system", "mean_planning_time"):
                continue
            lines.append(f"  {key}: {_format_value(value)}")
        lines.append("")
    if comparison is not None and len(comparison):
        lines.append("[comparison: Welch t-test]")
        for record in comparison.to_dict("records"):
            marker = " *" if record["significant"] else ""
            lines.append(f"  {record['metric']}: hlc={_format_value(record['hlc_mean'])} "
                         f"no-exploration={_format_value(record['no_exploration_mean'])} "
                         f"p={_format_value(record['p_value'])}{marker}")
        lines.append("")
    return "\n".join(lines)


def run_experiment(config: ExperimentConfig, storage_client=None) -> dict[str, MetricsReport]:
    """
    Runs every (system, list, rep) combination and writes report.csv, summary.txt,
    timing.csv and one SVG per successful run under `config.out`.
    """
    world = resolve_world(config.world, storage_client)
    classifier = load_classifier(config.classifier, config.stretch_length)
    specs = build_runs(config, world)
    logger.info(f"Experiment on {world.name}: {len(specs)} runs, {config.jobs} worker(s)")

    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(run_single, specs, repeat(config), repeat(world), repeat(classifier)))
    else:
        outcomes = [run_single(spec, config, world, classifier) for spec in specs]

    runs = pd.DataFrame([o[0] for o in outcomes], columns=REPORT_COLUMNS)
    timing = pd.DataFrame([o[1] for o in outcomes], columns=TIMING_COLUMNS)
    reports = summarize_runs(runs, timing)
    comparison = compare_systems(runs) if config.ablation else None

    save_artifact(runs.to_csv(index=False, float_format="%.6f"),
                  join_artifact_path(config.out, "report.csv"), storage_client)
    save_artifact(format_summary(config, reports, comparison),
                  join_artifact_path(config.out, "summary.txt"), storage_client)
    save_artifact(timing.to_csv(index=False, float_format="%.6f"),
                  join_artifact_path(config.out, "timing.csv"), storage_client)
    for spec, (_, _, svg) in zip(specs, outcomes):
        if svg is not None:
            save_artifact(svg, join_artifact_path(config.out, f"runs/{spec.name}.svg"), storage_client)

    failed = int(runs["failed"].astype(bool).sum())
    if failed:
        logger.warning(f"{failed} of {len(runs)} runs failed and are excluded from the averages")
    logger.info(f"Reports written to {config.out}")
    return reports
