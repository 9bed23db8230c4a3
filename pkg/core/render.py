"""SVG drawings of worlds and learned models."""

import xml.etree.ElementTree as ET
from typing import Iterable, Optional

import core.constants as constants
from core.passage_grid import PassageGrid
from core.planner import Plan
from core.skeleton import Skeleton
from core.utils import Point
from core.world import World

SVG_NAMESPACE = "http://www.w3.org/2000/svg"

STYLE = """
.bounds { fill: white; stroke: #888888; stroke-width: 1; }
.wall { stroke: black; stroke-width: 2; fill: none; }
.passage { fill: #3b6fd6; fill-opacity: 0.45; }
.obstructed { fill: #f2a7c3; fill-opacity: 0.6; }
.frequency { fill: #3b6fd6; }
.region { fill: none; stroke: #2a9d4b; stroke-width: 1; }
.skeleton-edge { stroke: #2a9d4b; stroke-width: 1.5; }
.waypoint { fill: #e07b00; }
.waypoint-label { font-size: 8px; font-family: sans-serif; fill: #e07b00; }
.trace { fill: none; stroke: #c1121f; stroke-width: 1; }
.target { fill: none; stroke: #c1121f; stroke-width: 1.5; }
"""


def _fmt(value: float) -> str:
    return f"{value:.2f}"


class _Canvas:
    """Maps world meters to pixels with the y axis pointing up."""

    def __init__(self, world: World, scale: float):
        self.world = world
        self.scale = scale

    def x(self, value: float) -> str:
        return _fmt(value * self.scale)

    def y(self, value: float) -> str:
        return _fmt((self.world.height - value) * self.scale)

    def length(self, value: float) -> str:
        return _fmt(value * self.scale)

    def points(self, points: Iterable[Point]) -> str:
        return " ".join(f"{self.x(p[0])},{self.y(p[1])}" for p in points)


def _layer(root: ET.Element, name: str) -> ET.Element:
    return ET.SubElement(root, "g", {"id": name})


def _cell_rect(parent: ET.Element, canvas: _Canvas, grid: PassageGrid, cell, css_class: str, **extra) -> None:
    size = grid.cell_size
    attributes = {
        "class": css_class,
        "x": canvas.x(cell[0] * size),
        "y": canvas.y((cell[1] + 1) * size),
        "width": canvas.length(size),
        "height": canvas.length(size),
    }
    attributes.update(extra)
    ET.SubElement(parent, "rect", attributes)


def render_svg(world: World, grid: Optional[PassageGrid] = None, skeleton: Optional[Skeleton] = None,
               plan: Optional[Plan] = None, trace: Optional[list[Point]] = None,
               frequency: Optional[dict] = None, targets: Optional[list[Point]] = None,
               scale: float = constants.SVG_PIXELS_PER_M) -> str:
    """
    Layered drawing: passage frequency, grid labels, walls, skeleton, plan, trace and
    targets, bottom to top. Every layer but the walls is optional.
    """
    canvas = _Canvas(world, scale)
    width, height = canvas.length(world.width), canvas.length(world.height)
    root = ET.Element("svg", {
        "xmlns": SVG_NAMESPACE,
        "width": width,
        "height": height,
        "viewBox": f"0 0 {width} {height}",
    })
    ET.SubElement(root, "title").text = world.name
    ET.SubElement(root, "style").text = STYLE
    ET.SubElement(root, "rect", {"class": "bounds", "x": "0", "y": "0", "width": width, "height": height})

    if frequency:
        layer = _layer(root, "frequency")
        cell_grid = grid or PassageGrid(world.width, world.height)
        for cell, share in sorted(frequency.items()):
            _cell_rect(layer, canvas, cell_grid, cell, "frequency", **{"fill-opacity": _fmt(share)})

    if grid is not None:
        layer = _layer(root, "grid")
        for cell in grid.passage_cells():
            _cell_rect(layer, canvas, grid, cell, "passage")
        for cell in grid.obstructed_cells():
            _cell_rect(layer, canvas, grid, cell, "obstructed")

    layer = _layer(root, "walls")
    for x1, y1, x2, y2 in world.walls:
        ET.SubElement(layer, "path", {
            "class": "wall",
            "d": f"M {canvas.x(x1)} {canvas.y(y1)} L {canvas.x(x2)} {canvas.y(y2)}",
        })

    if skeleton is not None:
        layer = _layer(root, "skeleton")
        for region in skeleton.regions.values():
            ET.SubElement(layer, "circle", {
                "class": "region",
                "cx": canvas.x(region.center[0]),
                "cy": canvas.y(region.center[1]),
                "r": canvas.length(region.radius),
            })
        for edge in skeleton.edges():
            ET.SubElement(layer, "polyline", {
                "class": "skeleton-edge",
                "points": canvas.points([edge.point_a, edge.midpoint, edge.point_b]),
            })

    if plan is not None and plan.waypoints:
        layer = _layer(root, "plan")
        for k, waypoint in enumerate(plan.waypoints):
            ET.SubElement(layer, "circle", {
                "class": "waypoint",
                "cx": canvas.x(waypoint[0]),
                "cy": canvas.y(waypoint[1]),
                "r": "2.50",
            })
            label = ET.SubElement(layer, "text", {
                "class": "waypoint-label",
                "x": _fmt(float(canvas.x(waypoint[0])) + 3),
                "y": _fmt(float(canvas.y(waypoint[1])) - 3),
            })
            label.text = str(k)

    if trace:
        layer = _layer(root, "trace")
        ET.SubElement(layer, "polyline", {"class": "trace", "points": canvas.points(trace)})

    if targets:
        layer = _layer(root, "targets")
        for target in targets:
            ET.SubElement(layer, "circle", {
                "class": "target",
                "cx": canvas.x(target[0]),
                "cy": canvas.y(target[1]),
                "r": canvas.length(constants.SUCCESS_RADIUS_M),
            })

    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"
