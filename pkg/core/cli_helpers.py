import argparse
import io
import os
from dataclasses import dataclass, field
from typing import Optional

import pandas as pd

from core.controller import parse_trace
from core.errors import ArtifactError
from core.exploration import parse_decisions
from core.passage_grid import PassageGrid, parse_grid
from core.perception import FeatureVector
from core.planner import Plan, parse_plan
from core.skeleton import Skeleton, parse_skeleton
from core.utils import Point, join_artifact_path, read_artifact
from core.world import Pose, World, load_world


class UsageError(Exception):
    """Bad command-line arguments; maps to exit status 1."""


class ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting with argparse's own status."""

    def error(self, message):
        raise UsageError(message)


def parse_numbers(text: str, count: int, name: str) -> tuple[float, ...]:
    """
    Parses comma-separated numbers such as "3.5,2" for --target.
    Raises UsageError when the count or a value is wrong.
    """
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != count:
        raise UsageError(f"{name} expects {count} comma-separated numbers, got '{text}'")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"{name} expects numbers, got '{text}'")


def parse_point(text: str) -> Point:
    return parse_numbers(text, 2, "point")


def parse_pose(text: str) -> Pose:
    return Pose(*parse_numbers(text, 3, "pose"))


def features_path(decision_log: str) -> str:
    """The features sidecar written next to a decision log."""
    directory = decision_log.rsplit("/", 1)[0] if "/" in decision_log else "."
    return join_artifact_path(directory, "features.csv")


def read_features(decision_log: str) -> list[FeatureVector]:
    path = features_path(decision_log)
    frame = pd.read_csv(io.StringIO(read_artifact(path)))
    missing = [name for name in FeatureVector.field_names() if name not in frame.columns]
    if missing:
        raise ArtifactError(f"{path}: missing feature columns {missing}")
    return [FeatureVector(**{name: float(row[name]) for name in FeatureVector.field_names()})
            for _, row in frame.iterrows()]


@dataclass
class RenderInputs:
    world: Optional[World] = None
    grids: list[PassageGrid] = field(default_factory=list)
    skeleton: Optional[Skeleton] = None
    plan: Optional[Plan] = None
    trace: list[Point] = field(default_factory=list)


def load_render_inputs(paths: list[str]) -> RenderInputs:
    """
    Sorts artifacts by extension: .world, .grid, .skeleton, .plan, .trace, and
    decision logs (.log). Edge lists are accepted and not drawn.

    Raises:
        ArtifactError: an extension is not recognized.
    """
    inputs = RenderInputs()
    for path in paths:
        extension = os.path.splitext(path)[1].lower()
        if extension == ".edges":
            continue
        if extension not in (".world", ".grid", ".skeleton", ".plan", ".trace", ".log"):
            raise ArtifactError(f"cannot tell the artifact type of '{path}'")
        text = read_artifact(path)
        if extension == ".world":
            inputs.world = load_world(text)
        elif extension == ".grid":
            inputs.grids.append(parse_grid(text))
        elif extension == ".skeleton":
            inputs.skeleton = parse_skeleton(text)
        elif extension == ".plan":
            inputs.plan = parse_plan(text)
        elif extension == ".trace":
            inputs.trace.extend(parse_trace(text))
        else:
            inputs.trace.extend(d.pose.point for d in parse_decisions(text))
    return inputs
