"""Planar primitives and the aspect-ratio procedure for text polygons.

Text instances are annotated clockwise from the top-left corner.  A
four-point instance is a :class:`Quad`; a curved instance with ``2n``
points has its top row in ``P_0 .. P_{n-1}`` and its bottom row, running
back right-to-left, in ``P_n .. P_{2n-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BadPointCount, DegenerateGeometry

MIN_POLYGON_POINTS = 4
MAX_POLYGON_POINTS = 16


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __sub__(self, other: Point2) -> tuple[float, float]:
        return (self.x - other.x, self.y - other.y)

    def dist(self, other: Point2) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def _as_points(points) -> tuple[Point2, ...]:
    out = []
    for p in points:
        if isinstance(p, Point2):
            out.append(p)
        else:
            x, y = p
            out.append(Point2(x, y))
    return tuple(out)


@dataclass(frozen=True)
class Polygon:
    """An annotated text outline with an even number of points (4 to 16)."""

    points: tuple[Point2, ...]

    def __post_init__(self):
        pts = _as_points(self.points)
        n = len(pts)
        if n % 2 or n < MIN_POLYGON_POINTS or n > MAX_POLYGON_POINTS:
            raise BadPointCount(
                f"polygon needs an even point count in [{MIN_POLYGON_POINTS}, "
                f"{MAX_POLYGON_POINTS}], got {n}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_flat(cls, coords: Sequence[float]) -> Polygon:
        """Build from ``[x1, y1, x2, y2, ...]``."""
        if len(coords) % 2:
            raise BadPointCount(f"odd coordinate count {len(coords)}")
        return cls(tuple(zip(coords[0::2], coords[1::2])))

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        """Vertices as a float array of shape ``(n, 2)``."""
        return np.array([(p.x, p.y) for p in self.points], dtype=float)

    def flat(self) -> list[float]:
        return [c for p in self.points for c in (p.x, p.y)]

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p.x for p in self.points]
        ys = [p.y for p in self.points]
        return min(xs), min(ys), max(xs), max(ys)

    def scaled(self, sx: float, sy: float) -> Polygon:
        return Polygon(tuple((p.x * sx, p.y * sy) for p in self.points))


@dataclass(frozen=True)
class Quad:
    """Four points in top-left, top-right, bottom-right, bottom-left order."""

    p0: Point2
    p1: Point2
    p2: Point2
    p3: Point2

    def __post_init__(self):
        pts = _as_points((self.p0, self.p1, self.p2, self.p3))
        for name, p in zip(("p0", "p1", "p2", "p3"), pts):
            object.__setattr__(self, name, p)
        for i in range(4):
            for j in range(i + 1, 4):
                if pts[i] == pts[j]:
                    raise DegenerateGeometry(f"quad vertices {i} and {j} coincide")

    @classmethod
    def from_points(cls, points: Iterable) -> Quad:
        pts = _as_points(points)
        if len(pts) != 4:
            raise BadPointCount(f"a quad needs 4 points, got {len(pts)}")
        return cls(*pts)

    @property
    def points(self) -> tuple[Point2, Point2, Point2, Point2]:
        return (self.p0, self.p1, self.p2, self.p3)


@dataclass(frozen=True)
class AspectMeasurement:
    l_hs: float
    l_vs: float
    ratio: float


def quad_horizontal_length(q: Quad) -> float:
    """Mean length of the top and bottom edges."""
    return (q.p1.dist(q.p0) + q.p3.dist(q.p2)) / 2.0


def law_of_cosines_angle(a: float, b: float, c: float) -> float:
    """Angle between sides ``a`` and ``b`` of a triangle whose third side is ``c``."""
    if a <= 0 or b <= 0:
        raise DegenerateGeometry("triangle side of zero length")
    cos_t = (a * a + b * b - c * c) / (2.0 * a * b)
    # floating drift on near-collinear corners can push |cos| past 1
    return math.acos(min(1.0, max(-1.0, cos_t)))


def interior_angle(q: Quad, vertex_index: int) -> float:
    """Angle at ``P_j`` between its two incident quad edges, in radians."""
    if not 0 <= vertex_index <= 3:
        raise IndexError(f"vertex_index must be 0..3, got {vertex_index}")
    pts = q.points
    here = pts[vertex_index]
    prev = pts[(vertex_index - 1) % 4]
    nxt = pts[(vertex_index + 1) % 4]
    a = here.dist(prev)
    b = here.dist(nxt)
    if a == 0 or b == 0:
        raise DegenerateGeometry(f"zero-length edge at vertex {vertex_index}")
    return law_of_cosines_angle(a, b, prev.dist(nxt))


def quad_vertical_length(q: Quad) -> float:
    """Mean height of the quad measured perpendicular to the text direction.

    Each lateral edge ``|P_j - P_{3-j}|`` is projected with the sine of the
    interior angle at ``P_j``; both endpoints of both lateral edges
    contribute, hence the factor 1/4.
    """
    pts = q.points
    total = 0.0
    for j in range(4):
        total += pts[j].dist(pts[3 - j]) * math.sin(interior_angle(q, j))
    return total / 4.0


def quad_aspect_ratio(q: Quad) -> AspectMeasurement:
    l_hs = quad_horizontal_length(q)
    l_vs = quad_vertical_length(q)
    if l_vs <= 0:
        raise DegenerateGeometry("quad has zero vertical length")
    return AspectMeasurement(l_hs, l_vs, l_hs / l_vs)


def polyline_decompose(poly: Polygon) -> list[Quad]:
    """Split a ``2n``-point curved outline into ``n - 1`` adjacent quads.

    Quad ``k`` is ``(P_k, P_{k+1}, P_{2n-2-k}, P_{2n-1-k})``.
    """
    m = len(poly.points)
    if m % 2 or m < 6:
        raise BadPointCount(f"curved decomposition needs an even count >= 6, got {m}")
    n = m // 2
    p = poly.points
    return [Quad(p[k], p[k + 1], p[2 * n - 2 - k], p[2 * n - 1 - k]) for k in range(n - 1)]


def curved_aspect_ratio(poly: Polygon) -> AspectMeasurement:
    """Summed horizontal length over mean vertical length of the sub-quads."""
    quads = polyline_decompose(poly)
    l_hs = math.fsum(quad_horizontal_length(q) for q in quads)
    l_vs = math.fsum(quad_vertical_length(q) for q in quads) / len(quads)
    if l_vs <= 0:
        raise DegenerateGeometry("curved polygon has zero vertical length")
    return AspectMeasurement(l_hs, l_vs, l_hs / l_vs)


def aspect_ratio(poly: Polygon) -> AspectMeasurement:
    """Dispatch to the quad or curved procedure by point count."""
    if len(poly.points) == 4:
        return quad_aspect_ratio(Quad.from_points(poly.points))
    return curved_aspect_ratio(poly)


def points_in_polygon(xs, ys, vertices) -> np.ndarray:
    """Vectorised even-odd containment test; boundary points count as inside.

    Args:
        xs, ys: arrays of query coordinates (broadcast together).
        vertices: ``(n, 2)`` array-like of polygon vertices, open ring.

    Returns:
        Boolean array with the broadcast shape of ``xs`` and ``ys``.
    """
    v = np.asarray(vertices, dtype=float)
    px, py = np.broadcast_arrays(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    inside = np.zeros(px.shape, dtype=bool)
    on_edge = np.zeros(px.shape, dtype=bool)
    extent = float(np.ptp(v[:, 0]) + np.ptp(v[:, 1]))
    eps = 1e-9 * max(1.0, extent)
    x0, y0 = v[:, 0], v[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    for ax, ay, bx, by in zip(x0, y0, x1, y1):
        straddles = (ay > py) != (by > py)
        if by != ay:
            x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
            inside ^= straddles & (px < x_cross)
        dx, dy = bx - ax, by - ay
        seg_len = math.hypot(dx, dy)
        if seg_len == 0:
            on_edge |= (np.abs(px - ax) <= eps) & (np.abs(py - ay) <= eps)
            continue
        cross = dx * (py - ay) - dy * (px - ax)
        within = ((px >= min(ax, bx) - eps) & (px <= max(ax, bx) + eps)
                  & (py >= min(ay, by) - eps) & (py <= max(ay, by) + eps))
        on_edge |= within & (np.abs(cross) <= eps * seg_len)
    return inside | on_edge


def point_in_polygon(p: Point2, poly: Polygon) -> bool:
    return bool(points_in_polygon(p.x, p.y, poly.as_array()))


def pixel_center_grid(x_min, y_min, x_max, y_max, nx, ny):
    """Pixel-centre sample coordinates of an ``ny x nx`` grid spanning a box."""
    sx = (x_max - x_min) / nx
    sy = (y_max - y_min) / ny
    xs = x_min + (np.arange(nx) + 0.5) * sx
    ys = y_min + (np.arange(ny) + 0.5) * sy
    return np.meshgrid(xs, ys)


def rasterize_polygon(poly: Polygon, width: int, height: int) -> np.ndarray:
    """Boolean ``(height, width)`` coverage of ``poly`` sampled at pixel centres."""
    gx, gy = pixel_center_grid(0.0, 0.0, float(width), float(height), width, height)
    return points_in_polygon(gx, gy, poly.as_array())


def polygon_iou(a: Polygon, b: Polygon, resolution: int = 128) -> float:
    """Intersection-over-union by supersampling the union bounding box.

    Both polygons are sampled on the same ``resolution x resolution`` grid of
    pixel centres, so the result is exactly symmetric in its arguments.
    """
    if resolution < 64:
        raise ValueError(f"resolution must be >= 64, got {resolution}")
    ax0, ay0, ax1, ay1 = a.bounds()
    bx0, by0, bx1, by1 = b.bounds()
    if ax1 < bx0 or bx1 < ax0 or ay1 < by0 or by1 < ay0:
        return 0.0
    x0, y0 = min(ax0, bx0), min(ay0, by0)
    x1, y1 = max(ax1, bx1), max(ay1, by1)
    if x1 <= x0 or y1 <= y0:
        raise DegenerateGeometry("polygons have zero sampled area")
    gx, gy = pixel_center_grid(x0, y0, x1, y1, resolution, resolution)
    in_a = points_in_polygon(gx, gy, a.as_array())
    in_b = points_in_polygon(gx, gy, b.as_array())
    union = int(np.count_nonzero(in_a | in_b))
    if union == 0:
        raise DegenerateGeometry("polygons have zero sampled area")
    return int(np.count_nonzero(in_a & in_b)) / union
