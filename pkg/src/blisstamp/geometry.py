"""Convex obstacle geometry: half-plane extraction, containment, segment
clipping, and polygon inflation.

All polygons are convex, stored both as a CCW vertex loop and as a list of
unit-normal half-planes ``(H, b)`` with interior ``{p : H @ p < b for all
planes}``. Unit normals keep every clearance/back-off quantity in meters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

_VERTEX_TOL = 1e-12
_AREA_TOL = 1e-12


class GeometryError(ValueError):
    pass


class DegeneratePolygon(GeometryError):
    """Fewer than 3 distinct vertices, or all vertices collinear."""


class NonConvex(GeometryError):
    """Cross products around the vertex loop change sign."""


class NegativeRadius(GeometryError):
    pass


class MapFormatError(GeometryError):
    """Malformed map file; message carries the offending location."""


def _dedupe_collinear(vertices: np.ndarray) -> np.ndarray:
    """Drop duplicate and collinear vertices from a closed loop."""
    out = []
    n = len(vertices)
    for i in range(n):
        prev = vertices[(i - 1) % n]
        cur = vertices[i]
        nxt = vertices[(i + 1) % n]
        if np.linalg.norm(cur - nxt) <= _VERTEX_TOL:
            continue
        cross = (cur[0] - prev[0]) * (nxt[1] - prev[1]) - (cur[1] - prev[1]) * (nxt[0] - prev[0])
        if abs(cross) <= _AREA_TOL:
            continue
        out.append(cur)
    return np.asarray(out, dtype=float)


def halfplanes_from_polygon(vertices) -> list[tuple[np.ndarray, float]]:
    """One unit-normal half-plane per edge of a CCW convex polygon.

    Returns ``[(H_i, b_i), ...]`` in edge order, where the interior strictly
    satisfies ``H_i @ p < b_i`` for every i.

    Raises DegeneratePolygon for collinear or <3 distinct vertices, NonConvex
    when the turn direction flips around the loop.
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
        raise DegeneratePolygon(f"need >= 3 two-dimensional vertices, got shape {verts.shape}")
    verts = _dedupe_collinear(verts)
    if len(verts) < 3:
        raise DegeneratePolygon("fewer than 3 distinct non-collinear vertices")

    n = len(verts)
    crosses = np.empty(n)
    for i in range(n):
        a, b, c = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
        crosses[i] = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if np.any(crosses > _AREA_TOL) and np.any(crosses < -_AREA_TOL):
        raise NonConvex("vertex loop is not convex")
    if np.all(crosses < 0):
        verts = verts[::-1]  # accept CW input, normalize to CCW

    planes = []
    n = len(verts)
    for i in range(n):
        d = verts[(i + 1) % n] - verts[i]
        normal = np.array([d[1], -d[0]])  # outward for CCW
        norm = np.linalg.norm(normal)
        if norm <= _VERTEX_TOL:
            raise DegeneratePolygon("zero-length edge")
        normal /= norm
        planes.append((normal, float(normal @ verts[i])))
    return planes


def _vertices_from_halfplanes(planes: list[tuple[np.ndarray, float]]) -> np.ndarray:
    """Vertices as intersections of consecutive half-planes (edge order)."""
    n = len(planes)
    verts = np.empty((n, 2))
    for i in range(n):
        h0, b0 = planes[(i - 1) % n]
        h1, b1 = planes[i]
        mat = np.array([h0, h1])
        det = np.linalg.det(mat)
        if abs(det) <= _VERTEX_TOL:
            raise DegeneratePolygon("parallel adjacent half-planes")
        verts[i] = np.linalg.solve(mat, np.array([b0, b1]))
    return verts


@dataclass(frozen=True)
class ConvexObstacle:
    """Immutable convex polygon with CCW vertices and unit-normal half-planes."""

    vertices: np.ndarray
    halfplanes: list[tuple[np.ndarray, float]] = field(compare=False)

    @classmethod
    def from_vertices(cls, vertices) -> "ConvexObstacle":
        planes = halfplanes_from_polygon(vertices)
        verts = _vertices_from_halfplanes(planes)
        obstacle = cls(vertices=verts, halfplanes=planes)
        obstacle.vertices.setflags(write=False)
        return obstacle

    def contains(self, p) -> bool:
        """Strict interior test: true iff ``H @ p < b`` for every plane."""
        p = np.asarray(p, dtype=float)
        return all(h @ p < b for h, b in self.halfplanes)

    def signed_clearance(self, p) -> float:
        """max_i (H_i @ p - b_i): positive outside, negative inside."""
        p = np.asarray(p, dtype=float)
        return max(float(h @ p - b) for h, b in self.halfplanes)

    def segment_intersects(self, p0, p1) -> bool:
        """Closed segment vs closed polygon, by half-plane clipping.

        Clips the parameter interval [0, 1] against every ``H @ x <= b``;
        a nonempty remainder means the segment touches the closed region.
        """
        p0 = np.asarray(p0, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        d = p1 - p0
        t_lo, t_hi = 0.0, 1.0
        for h, b in self.halfplanes:
            num = b - float(h @ p0)
            den = float(h @ d)
            if abs(den) <= 1e-15:
                if num < 0.0:
                    return False  # parallel and fully outside this plane
                continue
            t = num / den
            if den > 0.0:
                t_hi = min(t_hi, t)
            else:
                t_lo = max(t_lo, t)
            if t_lo > t_hi:
                return False
        return True

    def inflate(self, r: float) -> "ConvexObstacle":
        """Offset polygon: every half-plane pushed outward by ``r`` meters."""
        if r < 0:
            raise NegativeRadius(f"inflation radius must be >= 0, got {r}")
        planes = [(h.copy(), b + r) for h, b in self.halfplanes]
        verts = _vertices_from_halfplanes(planes)
        obstacle = ConvexObstacle(vertices=verts, halfplanes=planes)
        obstacle.vertices.setflags(write=False)
        return obstacle


def contains(obstacle: ConvexObstacle, p) -> bool:
    return obstacle.contains(p)


def segment_intersects(obstacle: ConvexObstacle, p0, p1) -> bool:
    return obstacle.segment_intersects(p0, p1)


def inflate(obstacle: ConvexObstacle, r: float) -> ConvexObstacle:
    return obstacle.inflate(r)


@dataclass(frozen=True)
class WorldMap:
    """Workspace rectangle, start/goal points, and convex obstacles."""

    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    start: np.ndarray
    goal: np.ndarray
    obstacles: list[ConvexObstacle]

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise MapFormatError(f"bounds: empty rectangle {self.bounds}")
        for name, p in (("start", self.start), ("goal", self.goal)):
            if not (xmin <= p[0] <= xmax and ymin <= p[1] <= ymax):
                raise MapFormatError(f"{name}: point {tuple(p)} outside bounds")
            for i, obs in enumerate(self.obstacles):
                if obs.signed_clearance(p) <= 0:
                    raise MapFormatError(f"{name}: point {tuple(p)} inside obstacles[{i}]")

    def point_in_any_obstacle(self, p) -> bool:
        return any(o.contains(p) for o in self.obstacles)

    def segment_hits_any_obstacle(self, p0, p1) -> bool:
        return any(o.segment_intersects(p0, p1) for o in self.obstacles)


def parse_map(text: str, source: str = "<map>") -> WorldMap:
    """Parse the JSON map document.

    Schema: ``{"bounds": [xmin, ymin, xmax, ymax], "start": [x, y],
    "goal": [x, y], "obstacles": [[[x, y], ...], ...]}`` with obstacle
    vertex loops in CCW order. Errors carry the JSON location (line/column
    for syntax errors, field path for semantic ones).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapFormatError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    def fail(path, msg):
        raise MapFormatError(f"{source}: {path}: {msg}")

    if not isinstance(doc, dict):
        fail("$", "top-level value must be an object")
    for key in ("bounds", "start", "goal", "obstacles"):
        if key not in doc:
            fail(key, "missing required field")

    bounds = doc["bounds"]
    if not (isinstance(bounds, list) and len(bounds) == 4):
        fail("bounds", "expected [xmin, ymin, xmax, ymax]")

    def point(path, raw):
        if not (isinstance(raw, list) and len(raw) == 2):
            fail(path, "expected [x, y]")
        try:
            return np.array([float(raw[0]), float(raw[1])])
        except (TypeError, ValueError):
            fail(path, "coordinates must be numbers")

    start = point("start", doc["start"])
    goal = point("goal", doc["goal"])
    if not isinstance(doc["obstacles"], list):
        fail("obstacles", "expected a list of vertex loops")
    obstacles = []
    for i, loop in enumerate(doc["obstacles"]):
        if not isinstance(loop, list):
            fail(f"obstacles[{i}]", "expected a vertex loop")
        pts = [point(f"obstacles[{i}][{j}]", v) for j, v in enumerate(loop)]
        try:
            obstacles.append(ConvexObstacle.from_vertices(pts))
        except GeometryError as exc:
            fail(f"obstacles[{i}]", str(exc))
    try:
        return WorldMap(bounds=tuple(float(v) for v in bounds), start=start,
                        goal=goal, obstacles=obstacles)
    except MapFormatError as exc:
        raise MapFormatError(f"{source}: {exc}") from exc


def load_map(path) -> WorldMap:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_map(fh.read(), source=str(path))


def dump_map(world: WorldMap) -> str:
    doc = {
        "bounds": list(world.bounds),
        "start": [float(world.start[0]), float(world.start[1])],
        "goal": [float(world.goal[0]), float(world.goal[1])],
        "obstacles": [[[float(x), float(y)] for x, y in o.vertices] for o in world.obstacles],
    }
    return json.dumps(doc, indent=2) + "\n"


def save_map(world: WorldMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_map(world))
