"""Benchmark worlds built in code: box, corridor, corridor-H and office-block."""

import math
from typing import Callable

from core.errors import WorldValidationError
from core.utils import read_artifact
from core.world import Pose, Segment, World, load_world

DOOR_WIDTH_M = 1.4
POST_SIZE_M = 0.4


def _rectangle(x0: float, y0: float, x1: float, y1: float) -> list[Segment]:
    return [(x0, y0, x1, y0), (x1, y0, x1, y1), (x1, y1, x0, y1), (x0, y1, x0, y0)]


def _split_for_door(edge: Segment, width: float = DOOR_WIDTH_M) -> list[Segment]:
    """Replaces an edge with the two pieces left after cutting a centered door."""
    x1, y1, x2, y2 = edge
    length = math.hypot(x2 - x1, y2 - y1)
    ux, uy = (x2 - x1) / length, (y2 - y1) / length
    a = (length - width) / 2
    b = (length + width) / 2
    return [
        (x1, y1, x1 + a * ux, y1 + a * uy),
        (x1 + b * ux, y1 + b * uy, x2, y2),
    ]


def _room(x0: float, y0: float, x1: float, y1: float, door_side: str) -> list[Segment]:
    """Walls of a rectangular room with one door on the bottom, right, top or left side."""
    bottom, right, top, left = _rectangle(x0, y0, x1, y1)
    sides = {"bottom": bottom, "right": right, "top": top, "left": left}
    walls = []
    for side, edge in sides.items():
        walls.extend(_split_for_door(edge) if side == door_side else [edge])
    return walls


def _dedupe(walls: list[Segment]) -> list[Segment]:
    """Drops repeated segments (shared room walls), ignoring endpoint order."""
    seen = set()
    unique = []
    for w in walls:
        key = tuple(sorted([(round(w[0], 6), round(w[1], 6)), (round(w[2], 6), round(w[3], 6))]))
        if key not in seen:
            seen.add(key)
            unique.append(w)
    return unique


def box_world() -> World:
    return World(10.0, 10.0, tuple(_rectangle(0.0, 0.0, 10.0, 10.0)), name="box", start=Pose(5.0, 5.0, 0.0))


def corridor_world() -> World:
    """A single 20 m by 2 m hall."""
    return World(
        22.0, 4.0, tuple(_rectangle(1.0, 1.0, 21.0, 3.0)),
        name="corridor", start=Pose(2.0, 2.0, 0.0), corridors=((1.0, 2.0, 21.0, 2.0),),
    )


def corridor_h_world() -> World:
    """Two 30 m halls joined by a 15 m cross hall, with one jog stub in each long hall."""
    outline = [
        (3.0, 3.0), (3.0, 33.0), (6.0, 33.0), (6.0, 19.5), (21.0, 19.5), (21.0, 33.0),
        (24.0, 33.0), (24.0, 3.0), (21.0, 3.0), (21.0, 16.5), (6.0, 16.5), (6.0, 3.0),
    ]
    walls = [
        (*outline[i], *outline[(i + 1) % len(outline)]) for i in range(len(outline))
    ]
    walls += [(3.0, 10.0, 3.3, 10.0), (24.0, 26.0, 23.7, 26.0)]
    corridors = ((4.5, 3.0, 4.5, 33.0), (22.5, 3.0, 22.5, 33.0), (6.0, 18.0, 21.0, 18.0))
    return World(27.0, 36.0, tuple(walls), name="corridor-H",
                 start=Pose(4.5, 4.5, math.pi / 2), corridors=corridors)


def office_block_world() -> World:
    """
    A 60 m by 40 m floor: a ring of 3 m corridors with a central cross, 36 rooms with
    doors onto the corridors, solid corners, jog stubs and a few square posts.
    """
    walls = _rectangle(0.0, 0.0, 60.0, 40.0)

    # Bands of rooms between the outer wall and the corridor ring
    for k in range(4):
        y0, y1 = 6.0 + 7.0 * k, 13.0 + 7.0 * k
        walls += _room(0.0, y0, 6.0, y1, "right")
        walls += _room(54.0, y0, 60.0, y1, "left")
    for k in range(6):
        x0, x1 = 6.0 + 8.0 * k, 14.0 + 8.0 * k
        walls += _room(x0, 0.0, x1, 6.0, "top")
        walls += _room(x0, 34.0, x1, 40.0, "bottom")

    # Interior blocks between the corridors, four rooms each
    for bx0, bx1 in ((9.0, 28.5), (31.5, 51.0)):
        for by0, by1 in ((9.0, 18.5), (21.5, 31.0)):
            mx, my = (bx0 + bx1) / 2, (by0 + by1) / 2
            for x0, x1 in ((bx0, mx), (mx, bx1)):
                walls += _room(x0, by0, x1, my, "bottom")
                walls += _room(x0, my, x1, by1, "top")

    # Jogs
    walls += [(6.0, 20.0, 6.3, 20.0), (54.0, 27.0, 53.7, 27.0), (22.0, 6.0, 22.0, 6.3)]

    # Posts
    for cx, cy in ((2.5, 16.5), (18.0, 2.5), (14.0, 11.4)):
        h = POST_SIZE_M / 2
        walls += _rectangle(cx - h, cy - h, cx + h, cy + h)

    corridors = (
        (7.5, 6.0, 7.5, 34.0), (30.0, 6.0, 30.0, 34.0), (52.5, 6.0, 52.5, 34.0),
        (6.0, 7.5, 54.0, 7.5), (6.0, 32.5, 54.0, 32.5), (9.0, 20.0, 51.0, 20.0),
    )
    return World(60.0, 40.0, tuple(_dedupe(walls)), name="office-block",
                 start=Pose(7.5, 7.5, 0.0), corridors=corridors)


BENCHMARKS: dict[str, Callable[[], World]] = {
    "box": box_world,
    "corridor": corridor_world,
    "corridor-H": corridor_h_world,
    "office-block": office_block_world,
}


def benchmark_world(name: str) -> World:
    if name not in BENCHMARKS:
        raise WorldValidationError(f"unknown benchmark world '{name}'; choose from {sorted(BENCHMARKS)}")
    return BENCHMARKS[name]()


def resolve_world(source: str, storage_client=None) -> World:
    """A benchmark by name, otherwise a world file path (local or gs://)."""
    if source in BENCHMARKS:
        return benchmark_world(source)
    return load_world(read_artifact(source, storage_client))
