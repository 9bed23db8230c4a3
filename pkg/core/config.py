"""Run configuration: navigation knobs and experiment settings."""

import dataclasses
from dataclasses import dataclass
from typing import Optional

import core.constants as constants
from core.errors import ConfigError
from core.utils import logger, read_artifact, strip_comment


@dataclass(frozen=True)
class HLCConfig:
    """Knobs shared by the simulator, perception, exploration and navigation."""
    ray_count: int = constants.RAY_COUNT
    sensor_arc_deg: float = constants.SENSOR_ARC_DEG
    max_range: float = constants.MAX_RANGE_M
    robot_radius: float = constants.ROBOT_RADIUS_M
    moves: tuple[float, ...] = constants.FORWARD_MOVES_M
    rotations: tuple[float, ...] = constants.ROTATIONS_RAD
    linear_speed: float = constants.LINEAR_SPEED_MPS
    angular_speed: float = constants.ANGULAR_SPEED_RPS
    stretch_length: float = constants.STRETCH_MIN_LENGTH_M
    veer_clearance: float = constants.VEER_CLEARANCE_M
    decisions_per_candidate: int = constants.DECISIONS_PER_CANDIDATE
    exploration_budget_s: float = constants.EXPLORATION_BUDGET_S
    actions_per_target: int = constants.ACTIONS_PER_TARGET

    def __post_init__(self):
        if self.ray_count < 2:
            raise ConfigError("ray_count must be at least 2")
        if not self.moves or not self.rotations:
            raise ConfigError("moves and rotations must be non-empty")
        for name in ("sensor_arc_deg", "max_range", "robot_radius", "linear_speed",
                     "angular_speed", "stretch_length", "exploration_budget_s"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.veer_clearance < 0:
            raise ConfigError("veer_clearance must not be negative")
        if self.decisions_per_candidate < 1 or self.actions_per_target < 1:
            raise ConfigError("caps must be at least 1")
        if any(m <= 0 for m in self.moves) or any(r <= 0 for r in self.rotations):
            raise ConfigError("move and rotation magnitudes must be positive")
        # Sorted sets keep action enumeration order stable
        object.__setattr__(self, "moves", tuple(sorted(float(m) for m in self.moves)))
        object.__setattr__(self, "rotations", tuple(sorted(float(r) for r in self.rotations)))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a world, target lists, repetitions and the systems to compare."""
    world: str
    seed: int = 0
    num_tasks: int = constants.NUM_TARGETS
    reps: int = constants.REPS_PER_LIST
    task_lists: int = constants.TASK_LISTS
    exploration_budget_s: float = constants.EXPLORATION_BUDGET_S
    decisions_per_candidate: int = constants.DECISIONS_PER_CANDIDATE
    actions_per_target: int = constants.ACTIONS_PER_TARGET
    stretch_length: float = constants.STRETCH_MIN_LENGTH_M
    veer_clearance: float = constants.VEER_CLEARANCE_M
    moves: tuple[float, ...] = constants.FORWARD_MOVES_M
    rotations: tuple[float, ...] = constants.ROTATIONS_RAD
    ablation: bool = False
    retry_failed: bool = False
    classifier: Optional[str] = None
    out: str = constants.ARTIFACT_PATH
    jobs: int = 1

    def __post_init__(self):
        if not self.world:
            raise ConfigError("world is required")
        if self.num_tasks < 0:
            raise ConfigError("num_tasks must not be negative")
        for name in ("reps", "task_lists", "decisions_per_candidate", "actions_per_target", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.exploration_budget_s <= 0 or self.stretch_length <= 0:
            raise ConfigError("exploration_budget_s and stretch_length must be positive")

    def to_hlc_config(self) -> HLCConfig:
        return HLCConfig(
            moves=self.moves,
            rotations=self.rotations,
            stretch_length=self.stretch_length,
            veer_clearance=self.veer_clearance,
            decisions_per_candidate=self.decisions_per_candidate,
            exploration_budget_s=self.exploration_budget_s,
            actions_per_target=self.actions_per_target,
        )


def _parse_bool(key: str, value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got '{value}'")


def _parse_float_list(key: str, value: str) -> tuple[float, ...]:
    try:
        return tuple(float(item) for item in value.split(',') if item.strip())
    except ValueError as e:
        raise ConfigError(f"{key}: expected comma-separated numbers, got '{value}'") from e


def parse_experiment_config(text: str) -> ExperimentConfig:
    """
    Parses a flat `key = value` experiment file. Lines starting with '#' and blank lines
    are ignored; list values are comma-separated.

    Raises:
        ConfigError: on unknown keys, malformed lines or invalid values.
    """
    known = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw)
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"line {line_number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in known:
            raise ConfigError(f"line {line_number}: unknown key '{key}'")

        default = known[key].default
        try:
            if key in ("moves", "rotations"):
                values[key] = _parse_float_list(key, value)
            elif isinstance(default, bool):
                values[key] = _parse_bool(key, value)
            elif isinstance(default, int):
                values[key] = int(value)
            elif isinstance(default, float):
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"line {line_number}: invalid value for '{key}': {value}") from e

    if "world" not in values:
        raise ConfigError("world is required")
    return ExperimentConfig(**values)


def load_experiment_config(path: str) -> ExperimentConfig:
    logger.info(f"Loading experiment config from {path}")
    return parse_experiment_config(read_artifact(path))
