"""View features and stretch detection."""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

import core.constants as constants
from core.utils import Point, normalize_angle
from core.world import Pose, View


@dataclass(frozen=True)
class FeatureVector:
    front_avg: float
    front_max: float
    front_min: float
    left_avg: float
    left_max: float
    right_avg: float
    right_max: float
    all_avg: float
    all_max: float
    all_min: float
    all_median: float
    all_std: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in self.field_names()], dtype=float)


@dataclass(frozen=True)
class Stretch:
    """A long, thin, unobstructed extent seen in one view."""
    origin: Point
    direction: float
    length: float
    width: float
    avg_length: float
    detected_at: Pose

    @property
    def end(self) -> Point:
        return (self.origin[0] + self.length * math.cos(self.direction),
                self.origin[1] + self.length * math.sin(self.direction))


def _sector_stats(values: np.ndarray) -> tuple[float, float, float]:
    if values.size == 0:
        return 0.0, 0.0, 0.0
    return float(values.mean()), float(values.max()), float(values.min())


def compute_features(view: View) -> FeatureVector:
    """
    Front is within the front half-angle of the heading, left and right are the lateral
    sectors on each side; the full-view median is the lower middle value.
    """
    front_half = math.radians(constants.FRONT_HALF_ANGLE_DEG)
    lateral_low, lateral_high = (math.radians(a) for a in constants.LATERAL_SECTOR_DEG)

    front_avg, front_max, front_min = _sector_stats(view.sector(-front_half, front_half))
    left_avg, left_max, _ = _sector_stats(view.sector(lateral_low, lateral_high))
    right_avg, right_max, _ = _sector_stats(view.sector(-lateral_high, -lateral_low))

    ranges = view.ranges
    ordered = np.sort(ranges)
    return FeatureVector(
        front_avg=front_avg,
        front_max=front_max,
        front_min=front_min,
        left_avg=left_avg,
        left_max=left_max,
        right_avg=right_avg,
        right_max=right_max,
        all_avg=float(ranges.mean()),
        all_max=float(ordered[-1]),
        all_min=float(ordered[0]),
        all_median=float(ordered[(len(ordered) - 1) // 2]),
        all_std=float(ranges.std()),
    )


def front_clearance(view: View, half_angle_deg: float = constants.FRONT_CLEARANCE_HALF_ANGLE_DEG) -> float:
    """Smallest range directly in front of the robot."""
    half = math.radians(half_angle_deg)
    front = view.sector(-half, half)
    if front.size == 0:
        index = view.ray_toward(0.0)
        return float(view.ranges[index])
    return float(front.min())


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (start, end) index pairs of maximal runs of True."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    changes = np.flatnonzero(np.diff(padded))
    return [(int(s), int(e) - 1) for s, e in zip(changes[::2], changes[1::2])]


def _side_width(view: View, flank: int, edge: int, center: float, d: float) -> float:
    """Lateral free distance on one side of a run, from its first flanking short ray."""
    rel = view.relative_angles
    if 0 <= flank < len(view.ranges):
        return float(view.ranges[flank] * abs(math.sin(rel[flank] - center)))
    return min(float(view.ranges[edge] * abs(math.sin(rel[edge] - center))), d)


def detect_stretches(view: View, d: float = constants.STRETCH_MIN_LENGTH_M) -> list[Stretch]:
    """
    One Stretch per maximal run of contiguous rays with range >= d spanning at least the
    minimum cone. Sorted by length, longest first.
    """
    rel = view.relative_angles
    min_rays = max(1, int(round(math.radians(constants.STRETCH_MIN_CONE_DEG) / view.angle_step)))
    window_cap = math.radians(constants.STRETCH_LENGTH_WINDOW_DEG)

    stretches = []
    for start, end in _runs(view.ranges >= d):
        if end - start + 1 < min_rays:
            continue
        run = view.ranges[start:end + 1]
        center = (rel[start] + rel[end]) / 2
        half_angle = (rel[start] - rel[end]) / 2
        window = min(window_cap, half_angle / 3)
        central = run[np.abs(rel[start:end + 1] - center) <= window + constants.EPSILON]
        if central.size == 0:
            central = run[[int(np.argmin(np.abs(rel[start:end + 1] - center)))]]

        width = (_side_width(view, start - 1, start, center, d)
                 + _side_width(view, end + 1, end, center, d))
        stretches.append(Stretch(
            origin=view.pose.point,
            direction=normalize_angle(view.pose.theta + center),
            length=float(central.min()),
            width=width,
            avg_length=float(run.mean()),
            detected_at=view.pose,
        ))

    stretches.sort(key=lambda s: -s.length)
    return stretches
