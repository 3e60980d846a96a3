import math

import numpy as np
import pytest

from oskgeom.geom import Quad, quad_from_points


def rotated_rect(cx, cy, w, h, angle_rad) -> Quad:
    """Clockwise-ordered (raster frame) rectangle rotated about its center."""
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    pts = np.array([[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]])
    rot = np.array([[c, -s], [s, c]])
    return quad_from_points(pts @ rot.T + (cx, cy))


def random_rect(rng, lo=8.0, hi=80.0, span=200.0) -> Quad:
    cx, cy = rng.uniform(0.0, span, 2)
    w, h = rng.uniform(lo, hi, 2)
    ang = rng.uniform(0.0, math.pi)
    return rotated_rect(cx, cy, w, h, ang)


def random_convex_quad(rng, span=200.0) -> Quad:
    """Generic convex quad: a rotated rect with vertices nudged while
    convexity and validity survive."""
    base = random_rect(rng, span=span)
    for _ in range(20):
        noise = rng.normal(0.0, 2.0, (4, 2))
        try:
            q = quad_from_points(base.vertices + noise)
        except Exception:
            continue
        if q.is_convex():
            return q
    return base


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
