import math

import numpy as np
import pytest

from conftest import random_convex_quad, random_rect, rotated_rect
from oskgeom.errors import (
    DegenerateQuadError,
    EmptyUnionError,
    NonConvexInputError,
    SelfIntersectingError,
)
from oskgeom.geom import (
    iou_exact,
    iou_pixel,
    keypoints_from_quad,
    quad_from_points,
    signed_area,
)


class TestQuadFromPoints:
    def test_valid_rect(self):
        q = quad_from_points([(0, 0), (10, 0), (10, 4), (0, 4)])
        assert q.area == pytest.approx(40.0)

    def test_bow_tie_rejected(self):
        with pytest.raises(SelfIntersectingError):
            quad_from_points([(0, 0), (10, 0), (0, 4), (10, 4)])

    def test_collinear_rejected(self):
        with pytest.raises(DegenerateQuadError):
            quad_from_points([(0, 0), (1, 0), (2, 0), (3, 0)])

    def test_duplicate_vertex_rejected(self):
        with pytest.raises(DegenerateQuadError):
            quad_from_points([(0, 0), (0, 0), (10, 0), (0, 10)])

    def test_nan_rejected(self):
        with pytest.raises(DegenerateQuadError):
            quad_from_points([(0, 0), (np.nan, 0), (10, 4), (0, 4)])

    def test_vertices_read_only(self):
        q = quad_from_points([(0, 0), (10, 0), (10, 4), (0, 4)])
        with pytest.raises(ValueError):
            q.vertices[0, 0] = 5.0


class TestKeypoints:
    def test_axis_rect_midpoint(self):
        kp = keypoints_from_quad(quad_from_points([(10, 10), (20, 10), (20, 20), (10, 20)]))
        assert kp.points[4] == pytest.approx([15.0, 10.0])
        assert kp.midpoint_angles[0] == 0.0

    def test_axis_rect_vertex_angles(self):
        kp = keypoints_from_quad(quad_from_points([(10, 10), (20, 10), (20, 20), (10, 20)]))
        assert sorted(kp.vertex_angles[0]) == pytest.approx([0.0, math.pi / 2])

    def test_square_rotated_45(self):
        q = rotated_rect(0, 0, 10, 10, math.pi / 4)
        kp = keypoints_from_quad(q)
        for a in kp.midpoint_angles:
            assert min(abs(a - math.pi / 4), abs(a - 3 * math.pi / 4)) < 1e-12

    def test_midpoint_identity(self, rng):
        for _ in range(50):
            q = random_convex_quad(rng)
            kp = keypoints_from_quad(q)
            v = q.vertices
            for k in range(4):
                expect = 0.5 * (v[k] + v[(k + 1) % 4])
                assert np.abs(kp.points[4 + k] - expect).max() < 1e-9

    def test_angles_in_range_and_undirected(self, rng):
        for _ in range(50):
            q = random_convex_quad(rng)
            kp = keypoints_from_quad(q)
            all_angles = np.concatenate([kp.vertex_angles.ravel(), kp.midpoint_angles])
            assert np.all((all_angles >= 0.0) & (all_angles < math.pi))
            rev = keypoints_from_quad(quad_from_points(q.vertices[::-1]))
            fwd = np.sort(np.concatenate([kp.midpoint_angles]))
            bwd = np.sort(np.concatenate([rev.midpoint_angles]))
            assert np.abs(fwd - bwd).max() < 1e-12


class TestIouExact:
    def test_identity_is_exactly_one(self, rng):
        for _ in range(20):
            q = random_convex_quad(rng)
            assert iou_exact(q, q) == 1.0

    def test_disjoint(self):
        a = quad_from_points([(0, 0), (1, 0), (1, 1), (0, 1)])
        b = quad_from_points([(5, 5), (6, 5), (6, 6), (5, 6)])
        assert iou_exact(a, b) == 0.0

    def test_offset_squares_third(self):
        a = quad_from_points([(0, 0), (1, 0), (1, 1), (0, 1)])
        b = quad_from_points([(0.5, 0), (1.5, 0), (1.5, 1), (0.5, 1)])
        assert iou_exact(a, b) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_symmetry(self, rng):
        for _ in range(100):
            a, b = random_convex_quad(rng), random_convex_quad(rng)
            assert abs(iou_exact(a, b) - iou_exact(b, a)) < 1e-12

    def test_rigid_invariance(self, rng):
        for _ in range(30):
            a, b = random_rect(rng), random_rect(rng)
            phi = rng.uniform(0, 2 * math.pi)
            t = rng.uniform(-50, 50, 2)
            c, s = math.cos(phi), math.sin(phi)
            rot = np.array([[c, -s], [s, c]])
            a2 = quad_from_points(a.vertices @ rot.T + t)
            b2 = quad_from_points(b.vertices @ rot.T + t)
            assert abs(iou_exact(a, b) - iou_exact(a2, b2)) < 1e-9

    def test_rotated_square_vs_axis_square(self):
        sq = quad_from_points([(0, 0), (2, 0), (2, 2), (0, 2)])
        rq = rotated_rect(1, 1, 2, 2, math.pi / 4)
        assert abs(iou_exact(sq, rq) - iou_pixel(sq, rq, 2000)) <= 5e-3

    def test_nonconvex_raises(self):
        dart = quad_from_points([(0, 0), (10, 0), (2, 2), (0, 10)])
        sq = quad_from_points([(0, 0), (2, 0), (2, 2), (0, 2)])
        with pytest.raises(NonConvexInputError):
            iou_exact(dart, sq)


def _pixel_reference(a, b, resolution):
    """Naive per-pixel crossing-parity rasterization (independent of
    the scanline kernels)."""

    def inside(verts, xs, ys):
        flags = np.zeros(xs.shape, dtype=bool)
        for e in range(4):
            px, py = verts[e]
            qx, qy = verts[(e + 1) % 4]
            if py == qy:
                continue
            cross = ((py <= ys) & (ys < qy)) | ((qy <= ys) & (ys < py))
            xi = px + (ys - py) * (qx - px) / (qy - py)
            flags ^= cross & (xs <= xi)
        return flags

    ax0, ay0, ax1, ay1 = a.bbox()
    bx0, by0, bx1, by1 = b.bbox()
    minx, miny = min(ax0, bx0), min(ay0, by0)
    maxx, maxy = max(ax1, bx1), max(ay1, by1)
    dx, dy = (maxx - minx) / resolution, (maxy - miny) / resolution
    cols = minx + (np.arange(resolution) + 0.5) * dx
    rows = miny + (np.arange(resolution) + 0.5) * dy
    xs, ys = np.meshgrid(cols, rows)
    in_a = inside(a.vertices, xs, ys)
    in_b = inside(b.vertices, xs, ys)
    either = np.count_nonzero(in_a | in_b)
    return np.count_nonzero(in_a & in_b) / either


class TestIouPixel:
    def test_identical(self, rng):
        q = random_convex_quad(rng)
        assert iou_pixel(q, q, 128) == 1.0

    def test_disjoint(self):
        a = quad_from_points([(0, 0), (1, 0), (1, 1), (0, 1)])
        b = quad_from_points([(5, 5), (6, 5), (6, 6), (5, 6)])
        assert iou_pixel(a, b, 128) == 0.0

    def test_offset_squares_converges(self):
        a = quad_from_points([(0, 0), (1, 0), (1, 1), (0, 1)])
        b = quad_from_points([(0.5, 0), (1.5, 0), (1.5, 1), (0.5, 1)])
        assert abs(iou_pixel(a, b, 2000) - 1.0 / 3.0) <= 2e-3

    def test_resolution_floor(self):
        a = quad_from_points([(0, 0), (1, 0), (1, 1), (0, 1)])
        with pytest.raises(ValueError):
            iou_pixel(a, a, 32)

    def test_matches_naive_reference(self, rng):
        for _ in range(25):
            a, b = random_convex_quad(rng), random_convex_quad(rng)
            got = iou_pixel(a, b, 128)
            ref = _pixel_reference(a, b, 128)
            assert got == pytest.approx(ref, abs=1e-9)

    def test_concave_quad_supported(self):
        # dart: pixel area ratio against shoelace areas
        dart = quad_from_points([(0, 0), (10, 0), (4, 4), (0, 10)])
        box = quad_from_points([(0, 0), (10, 0), (10, 10), (0, 10)])
        expect = abs(signed_area(dart.vertices)) / 100.0
        assert iou_pixel(dart, box, 1000) == pytest.approx(expect, abs=2e-3)

    def test_oracle_equivalence_sample(self, rng):
        worst = 0.0
        for _ in range(150):
            a, b = random_convex_quad(rng), random_convex_quad(rng)
            worst = max(worst, abs(iou_exact(a, b) - iou_pixel(a, b, 2000)))
        assert worst <= 5e-3

    def test_empty_union_raises(self):
        # two far-apart specks: every pixel center of the joint grid misses both
        a = quad_from_points([(0, 0), (0.001, 0), (0.001, 0.001), (0, 0.001)])
        b = quad_from_points([(1000, 1000), (1000.001, 1000), (1000.001, 1000.001), (1000, 1000.001)])
        with pytest.raises(EmptyUnionError):
            iou_pixel(a, b, 64)
