"""Rotated-quadrilateral geometry.

Coordinate convention throughout the package: image/raster frame, x
rightward and y downward. A vertex ring with positive shoelace sum in
raw coordinates traverses the quad clockwise on screen.
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateQuadError,
    EmptyUnionError,
    NonConvexInputError,
    SelfIntersectingError,
)
from .kernels import ACTIVE as _K

DEGENERATE_AREA = 1e-9
DEGENERATE_EDGE = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


def signed_area(vertices) -> float:
    """Shoelace signed area; positive for screen-clockwise rings."""
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def positively_oriented(vertices) -> np.ndarray:
    """Return the ring with positive shoelace sum (reversed if needed)."""
    v = np.asarray(vertices, dtype=np.float64)
    if signed_area(v) < 0.0:
        return v[::-1].copy()
    return v


def edge_inclinations(vertices) -> np.ndarray:
    """Undirected inclination of each edge k -> k+1, normalized to [0, pi)."""
    v = np.asarray(vertices, dtype=np.float64)
    d = np.roll(v, -1, axis=0) - v
    ang = np.arctan2(d[:, 1], d[:, 0]) % np.pi
    ang[ang == np.pi] = 0.0
    return ang


def _segments_cross(p1, p2, p3, p4) -> bool:
    """Proper crossing test for segments p1p2 and p3p4."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return d1 * d2 < 0 and d3 * d4 < 0


class Quad:
    """A rotated quadrilateral as 4 perimeter-ordered vertices.

    Construct through :func:`quad_from_points`, which validates the
    ring (finite coordinates, non-degenerate area, no self
    intersection, no collapsed edges).
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices: np.ndarray):
        self.vertices = vertices

    def __repr__(self):
        pts = ", ".join(f"({x:g},{y:g})" for x, y in self.vertices)
        return f"Quad[{pts}]"

    @property
    def area(self) -> float:
        return abs(signed_area(self.vertices))

    def is_convex(self) -> bool:
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        en = np.roll(e, -1, axis=0)
        cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
        scale = float(np.max(np.abs(cross))) + 1e-30
        return bool(np.all(cross >= -1e-9 * scale) or np.all(cross <= 1e-9 * scale))

    def shifted(self, k: int) -> "Quad":
        """Cyclic rotation of the vertex ring (geometry unchanged)."""
        return Quad(np.roll(self.vertices, -k, axis=0).copy())

    def bbox(self):
        v = self.vertices
        return (
            float(v[:, 0].min()),
            float(v[:, 1].min()),
            float(v[:, 0].max()),
            float(v[:, 1].max()),
        )


def quad_from_points(raw: Sequence) -> Quad:
    """Validate 4 points as a simple, non-degenerate quadrilateral.

    Raises:
        DegenerateQuadError: area below 1e-9 px^2 or a collapsed edge.
        SelfIntersectingError: the two pairs of opposite edges cross.
    """
    v = np.asarray(raw, dtype=np.float64).reshape(4, 2).copy()
    if not np.all(np.isfinite(v)):
        raise DegenerateQuadError("non-finite vertex coordinates")
    # crossing test first: a symmetric bow-tie also has zero signed area
    if _segments_cross(v[0], v[1], v[2], v[3]) or _segments_cross(v[1], v[2], v[3], v[0]):
        raise SelfIntersectingError("opposite edges cross (bow-tie ordering)")
    if abs(signed_area(v)) < DEGENERATE_AREA:
        raise DegenerateQuadError(f"area below {DEGENERATE_AREA} px^2")
    edges = np.roll(v, -1, axis=0) - v
    if np.any(np.hypot(edges[:, 0], edges[:, 1]) < DEGENERATE_EDGE):
        raise DegenerateQuadError("collapsed edge (duplicate vertices)")
    v.setflags(write=False)
    return Quad(v)


@dataclass(frozen=True)
class KeypointSet:
    """8 keypoints: vertices p0..p3 and edge midpoints p4..p7.

    ``vertex_angles[k]`` holds the inclinations of the two edges meeting
    at vertex k (toward k+1 and toward k-1); ``midpoint_angles[k]`` the
    inclination of edge k -> k+1. All angles lie in [0, pi).
    """

    points: np.ndarray
    vertex_angles: np.ndarray
    midpoint_angles: np.ndarray


def keypoints_from_quad(q: Quad) -> KeypointSet:
    v = q.vertices
    mids = 0.5 * (v + np.roll(v, -1, axis=0))
    incl = edge_inclinations(v)
    vertex_angles = np.stack([incl, np.roll(incl, 1)], axis=1)
    return KeypointSet(
        points=np.vstack([v, mids]),
        vertex_angles=vertex_angles,
        midpoint_angles=incl.copy(),
    )


def _require_convex(q: Quad, name: str):
    if not q.is_convex():
        raise NonConvexInputError(f"{name} is not convex; use iou_pixel instead")


def iou_exact(a: Quad, b: Quad) -> float:
    """Exact intersection-over-union of two convex quads.

    Computed by clipping one ring against the other and taking shoelace
    areas; union = A + B - I. Symmetric in its arguments up to float
    round-off.
    """
    _require_convex(a, "first quad")
    _require_convex(b, "second quad")
    va = positively_oriented(a.vertices)
    vb = positively_oriented(b.vertices)
    area_a = signed_area(va)
    area_b = signed_area(vb)
    poly = _K.clip_polygon(va, vb)
    inter = signed_area(poly) if poly.shape[0] >= 3 else 0.0
    if inter <= 0.0:
        return 0.0
    union = area_a + area_b - inter
    return float(min(1.0, max(0.0, inter / union)))


def iou_pixel(a: Quad, b: Quad, resolution: int) -> float:
    """Rasterized IoU: count pixel centers inside each quad.

    The grid spans the joint bounding box with ``resolution`` cells per
    axis. Deterministic for a fixed resolution; works for any simple
    quad (even-odd fill rule).
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    ax0, ay0, ax1, ay1 = a.bbox()
    bx0, by0, bx1, by1 = b.bbox()
    minx, miny = min(ax0, bx0), min(ay0, by0)
    maxx, maxy = max(ax1, bx1), max(ay1, by1)
    dx = (maxx - minx) / resolution
    dy = (maxy - miny) / resolution
    if dx <= 0.0 or dy <= 0.0:
        raise EmptyUnionError("joint bounding box has zero extent")
    both, either = _K.raster_counts(
        np.ascontiguousarray(a.vertices),
        np.ascontiguousarray(b.vertices),
        minx,
        miny,
        dx,
        dy,
        resolution,
    )
    if either <= 0.0:
        raise EmptyUnionError("no pixel centers fall inside either quad")
    return both / either
