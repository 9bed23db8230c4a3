"""Candidate stretches awaiting deliberate exploration."""

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import core.constants as constants
from core.classifier import Place, RoomPassageClassifier, classify
from core.passage_grid import PassageGrid
from core.perception import FeatureVector, Stretch
from core.utils import logger, segment_segment_distance
from core.world import Pose


class IntervalRelation(str, enum.Enum):
    """The 13 basic relations between two intervals X and Y on a line."""
    EQUALS = "EQUALS"
    BEFORE = "BEFORE"
    AFTER = "AFTER"
    MEETS = "MEETS"
    MET_BY = "MET_BY"
    OVERLAPS = "OVERLAPS"
    OVERLAPPED_BY = "OVERLAPPED_BY"
    STARTS = "STARTS"
    STARTED_BY = "STARTED_BY"
    FINISHES = "FINISHES"
    FINISHED_BY = "FINISHED_BY"
    DURING = "DURING"
    CONTAINS = "CONTAINS"


DISJOINT_RELATIONS = frozenset({
    IntervalRelation.BEFORE, IntervalRelation.AFTER, IntervalRelation.MEETS, IntervalRelation.MET_BY,
})


def interval_relation(start1: float, end1: float, start2: float, end2: float) -> IntervalRelation:
    """
    Relation of X = [start1, end1] to Y = [start2, end2].

    Raises:
        ValueError: if either interval is empty.
    """
    if start1 >= end1 or start2 >= end2:
        raise ValueError("intervals must have start < end")
    if start1 == start2 and end1 == end2:
        return IntervalRelation.EQUALS
    if end1 < start2:
        return IntervalRelation.BEFORE
    if start1 > end2:
        return IntervalRelation.AFTER
    if end1 == start2:
        return IntervalRelation.MEETS
    if start1 == end2:
        return IntervalRelation.MET_BY
    if start1 == start2:
        return IntervalRelation.STARTS if end1 < end2 else IntervalRelation.STARTED_BY
    if end1 == end2:
        return IntervalRelation.FINISHES if start1 > start2 else IntervalRelation.FINISHED_BY
    if start1 > start2 and end1 < end2:
        return IntervalRelation.DURING
    if start1 < start2 and end1 > end2:
        return IntervalRelation.CONTAINS
    return IntervalRelation.OVERLAPS if start1 < start2 else IntervalRelation.OVERLAPPED_BY


def similar_stretches(a: Stretch, b: Stretch) -> bool:
    """
    Two stretches are similar when their segments come within 1 m of each other and their
    projections on the longer one's axis overlap by at least a third of their mean length.
    """
    if segment_segment_distance(a.origin, a.end, b.origin, b.end) > constants.SIMILAR_DISTANCE_M:
        return False

    axis = min((a, b), key=lambda s: (-s.length, s.origin, s.direction))
    ux, uy = math.cos(axis.direction), math.sin(axis.direction)

    def project(s: Stretch) -> tuple[float, float]:
        p0 = (s.origin[0] - axis.origin[0]) * ux + (s.origin[1] - axis.origin[1]) * uy
        p1 = (s.end[0] - axis.origin[0]) * ux + (s.end[1] - axis.origin[1]) * uy
        return min(p0, p1), max(p0, p1)

    (sa, ea), (sb, eb) = project(a), project(b)
    if ea - sa <= 0 or eb - sb <= 0:
        return False
    if interval_relation(sa, ea, sb, eb) in DISJOINT_RELATIONS:
        return False
    overlap = min(ea, eb) - max(sa, sb)
    needed = constants.SIMILAR_OVERLAP_FRACTION * (a.length + b.length) / 2
    return overlap >= needed - constants.EPSILON


class CandidateState(enum.Enum):
    PENDING = "Pending"
    EXPLORED = "Explored"
    REJECTED = "Rejected"


@dataclass(eq=False)
class Candidate:
    stretch: Stretch
    state: CandidateState = CandidateState.PENDING

    @property
    def start(self) -> Pose:
        return self.stretch.detected_at


class CandidateList:
    """Pending candidates, front first, plus every candidate ever enqueued or rejected."""

    def __init__(self):
        self.pending: deque[Candidate] = deque()
        self.history: list[Candidate] = []

    def __len__(self):
        return len(self.pending)

    def similar_to_any(self, stretch: Stretch) -> bool:
        return any(similar_stretches(stretch, c.stretch) for c in self.history)

    def explored(self) -> list[Candidate]:
        return [c for c in self.history if c.state is CandidateState.EXPLORED]

    def reject(self, candidate: Candidate) -> None:
        candidate.state = CandidateState.REJECTED
        if candidate not in self.history:
            self.history.append(candidate)


def coverage_allows(stretch: Stretch, grid: PassageGrid) -> bool:
    """Start, midpoint and end cells: none Obstructed and at most one Passage."""
    mid = ((stretch.origin[0] + stretch.end[0]) / 2, (stretch.origin[1] + stretch.end[1]) / 2)
    cells = [grid.cell_of(p) for p in (stretch.origin, mid, stretch.end)]
    if any(grid.is_obstructed(c) for c in cells):
        return False
    return sum(grid.is_passage(c) for c in cells) <= 1


def qualify_candidate(stretch: Stretch, grid: PassageGrid, candidates: CandidateList,
                      classifier: RoomPassageClassifier, features: FeatureVector) -> bool:
    if stretch.length <= stretch.width:
        return False
    if candidates.similar_to_any(stretch):
        return False
    if not coverage_allows(stretch, grid):
        return False
    return classify(classifier, features) is Place.PASSAGE


def enqueue_candidate(candidates: CandidateList, candidate: Candidate,
                      d: float = constants.STRETCH_MIN_LENGTH_M) -> None:
    """Long stretches (average length over 2 d) jump to the front of the list."""
    if candidate.stretch.avg_length > constants.FRONT_INSERT_FACTOR * d:
        candidates.pending.appendleft(candidate)
    else:
        candidates.pending.append(candidate)
    candidates.history.append(candidate)
    logger.debug(f"Enqueued stretch at {candidate.stretch.origin} heading {candidate.stretch.direction:.3f}, "
                 f"length {candidate.stretch.length:.2f}")


def next_candidate(candidates: CandidateList, grid: PassageGrid) -> Optional[Candidate]:
    """Pops candidates until one is still uncovered and unlike every explored candidate."""
    while candidates.pending:
        candidate = candidates.pending.popleft()
        explored = candidates.explored()
        if coverage_allows(candidate.stretch, grid) and not any(
            similar_stretches(candidate.stretch, e.stretch) for e in explored
        ):
            return candidate
        candidate.state = CandidateState.REJECTED
        logger.debug(f"Rejected stale candidate at {candidate.stretch.origin}")
    return None
