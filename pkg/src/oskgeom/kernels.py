"""Hot numeric kernels, in numba and pure-numpy flavors.

Three kernel families live here, each with two interchangeable
implementations selected through :mod:`oskgeom.backend`:

* ``raster_counts``  - scanline pixel-center counting for rasterized IoU
  (even-odd rule, so simple non-convex quads are handled too);
* ``gauss_channel``  - anisotropic Gaussian evaluation on an M x M grid,
  max-combined over one or two principal directions;
* ``clip_polygon``   - Sutherland-Hodgman clipping of a polygon by a
  convex quad (returns the clipped vertex ring).

Every function is a pure, single-threaded computation on plain float64
arrays; results are deterministic for a given backend.
"""

from typing import Callable, NamedTuple

import numpy as np

from . import backend


class KernelSet(NamedTuple):
    name: str
    raster_counts: Callable
    gauss_channel: Callable
    clip_polygon: Callable


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def _row_crossings_np(verts, ys):
    """Even-odd boundary crossings per scan row.

    Returns a (4, nrows) array of crossing x-coordinates sorted along
    axis 0, with +inf padding where fewer than four edges cross.
    """
    xs = np.full((4, ys.size), np.inf)
    for e in range(4):
        px, py = verts[e]
        qx, qy = verts[(e + 1) % 4]
        if py == qy:
            continue
        # half-open span so a row through a vertex is counted once
        mask = ((py <= ys) & (ys < qy)) | ((qy <= ys) & (ys < py))
        if mask.any():
            xs[e, mask] = px + (ys[mask] - py) * (qx - px) / (qy - py)
    xs.sort(axis=0)
    return xs


def _interval_ranges_np(lo, hi, minx, dx, res):
    """Integer pixel-column range [j0, j1] whose centers fall in [lo, hi]."""
    j0 = np.maximum(np.ceil((lo - minx) / dx - 0.5), 0.0)
    j1 = np.minimum(np.floor((hi - minx) / dx - 0.5), res - 1.0)
    return j0, j1


def _raster_counts_np(va, vb, minx, miny, dx, dy, res):
    ys = miny + (np.arange(res) + 0.5) * dy
    ranges = []
    for verts in (va, vb):
        s = _row_crossings_np(verts, ys)
        ranges.append(
            [
                _interval_ranges_np(s[0], s[1], minx, dx, res),
                _interval_ranges_np(s[2], s[3], minx, dx, res),
            ]
        )
    (a_ranges, b_ranges) = ranges

    def _count(j0, j1):
        return np.maximum(0.0, j1 - j0 + 1.0)

    n_a = sum(_count(j0, j1) for j0, j1 in a_ranges)
    n_b = sum(_count(j0, j1) for j0, j1 in b_ranges)
    n_both = np.zeros(res)
    for a0, a1 in a_ranges:
        for b0, b1 in b_ranges:
            n_both += _count(np.maximum(a0, b0), np.minimum(a1, b1))
    both = float(n_both.sum())
    either = float(n_a.sum() + n_b.sum()) - both
    return both, either


def _gauss_channel_np(m, mux, muy, comps):
    """Max of rotated Gaussians on an m x m grid with unit cell pitch.

    ``comps`` is (n, 4): cos/sin of the principal direction and the two
    inverse variances (along the direction, perpendicular to it). Cell
    (i, j) is evaluated at continuous coordinate (x=j, y=i).
    """
    gx = np.arange(m, dtype=np.float64) - mux
    gy = (np.arange(m, dtype=np.float64) - muy)[:, None]
    out = np.zeros((m, m))
    for c, s, iv_along, iv_perp in comps:
        u = c * gx + s * gy
        v = -s * gx + c * gy
        np.maximum(out, np.exp(-0.5 * (u * u * iv_along + v * v * iv_perp)), out)
    return out


def _clip_polygon_np(subject, clip):
    """Sutherland-Hodgman: clip ``subject`` by convex ``clip``.

    Both rings must be positively oriented (counter-clockwise in plain
    coordinate algebra). Returns an (n, 2) array, possibly empty.
    """
    output = [tuple(p) for p in subject]
    n_clip = len(clip)
    for e in range(n_clip):
        if not output:
            break
        ax, ay = clip[e]
        bx, by = clip[(e + 1) % n_clip]
        ex, ey = bx - ax, by - ay
        input_list = output
        output = []
        sx, sy = input_list[-1]
        s_in = ex * (sy - ay) - ey * (sx - ax) >= 0.0
        for px, py in input_list:
            p_in = ex * (py - ay) - ey * (px - ax) >= 0.0
            if p_in != s_in:
                dpx, dpy = sx - px, sy - py
                n1 = ax * by - ay * bx
                n2 = sx * py - sy * px
                n3 = 1.0 / ((ax - bx) * dpy - (ay - by) * dpx)
                output.append(((n1 * dpx - n2 * (ax - bx)) * n3, (n1 * dpy - n2 * (ay - by)) * n3))
            if p_in:
                output.append((px, py))
            sx, sy, s_in = px, py, p_in
    return np.array(output, dtype=np.float64).reshape(-1, 2)


NUMPY_KERNELS = KernelSet("numpy", _raster_counts_np, _gauss_channel_np, _clip_polygon_np)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

NUMBA_KERNELS = None

if backend.NUMBA_AVAILABLE:
    from numba import njit

    @njit(cache=True)
    def _row_ranges_nb(verts, y, minx, dx, res, j0_out, j1_out):
        # crossing x-values for this row, insertion-sorted, +inf padded
        xs = np.full(4, np.inf)
        n = 0
        for e in range(4):
            px = verts[e, 0]
            py = verts[e, 1]
            qx = verts[(e + 1) % 4, 0]
            qy = verts[(e + 1) % 4, 1]
            if (py <= y and y < qy) or (qy <= y and y < py):
                x = px + (y - py) * (qx - px) / (qy - py)
                k = n
                while k > 0 and xs[k - 1] > x:
                    xs[k] = xs[k - 1]
                    k -= 1
                xs[k] = x
                n += 1
        for t in range(2):
            lo = xs[2 * t]
            hi = xs[2 * t + 1]
            if hi == np.inf:
                j0_out[t] = 1
                j1_out[t] = 0
                continue
            f0 = np.ceil((lo - minx) / dx - 0.5)
            f1 = np.floor((hi - minx) / dx - 0.5)
            if f0 < 0.0:
                f0 = 0.0
            if f1 > res - 1.0:
                f1 = res - 1.0
            j0_out[t] = int(f0)
            j1_out[t] = int(f1)

    @njit(cache=True)
    def _raster_counts_nb(va, vb, minx, miny, dx, dy, res):
        both = 0
        either = 0
        a0 = np.empty(2, dtype=np.int64)
        a1 = np.empty(2, dtype=np.int64)
        b0 = np.empty(2, dtype=np.int64)
        b1 = np.empty(2, dtype=np.int64)
        for i in range(res):
            y = miny + (i + 0.5) * dy
            _row_ranges_nb(va, y, minx, dx, res, a0, a1)
            _row_ranges_nb(vb, y, minx, dx, res, b0, b1)
            n_a = 0
            n_b = 0
            n_i = 0
            for t in range(2):
                if a1[t] >= a0[t]:
                    n_a += a1[t] - a0[t] + 1
                if b1[t] >= b0[t]:
                    n_b += b1[t] - b0[t] + 1
            for ta in range(2):
                for tb in range(2):
                    o0 = max(a0[ta], b0[tb])
                    o1 = min(a1[ta], b1[tb])
                    if o1 >= o0:
                        n_i += o1 - o0 + 1
            both += n_i
            either += n_a + n_b - n_i
        return float(both), float(either)

    @njit(cache=True)
    def _gauss_channel_nb(m, mux, muy, comps):
        out = np.zeros((m, m))
        ncomp = comps.shape[0]
        for i in range(m):
            gy = i - muy
            for j in range(m):
                gx = j - mux
                best = 0.0
                for k in range(ncomp):
                    c = comps[k, 0]
                    s = comps[k, 1]
                    u = c * gx + s * gy
                    v = -s * gx + c * gy
                    val = np.exp(-0.5 * (u * u * comps[k, 2] + v * v * comps[k, 3]))
                    if val > best:
                        best = val
                out[i, j] = best
        return out

    @njit(cache=True)
    def _clip_polygon_nb(subject, clip):
        buf_in = np.empty((16, 2))
        buf_out = np.empty((16, 2))
        n_out = subject.shape[0]
        for i in range(n_out):
            buf_out[i, 0] = subject[i, 0]
            buf_out[i, 1] = subject[i, 1]
        n_clip = clip.shape[0]
        for e in range(n_clip):
            if n_out == 0:
                break
            ax = clip[e, 0]
            ay = clip[e, 1]
            bx = clip[(e + 1) % n_clip, 0]
            by = clip[(e + 1) % n_clip, 1]
            ex = bx - ax
            ey = by - ay
            n_in = n_out
            for i in range(n_in):
                buf_in[i, 0] = buf_out[i, 0]
                buf_in[i, 1] = buf_out[i, 1]
            n_out = 0
            sx = buf_in[n_in - 1, 0]
            sy = buf_in[n_in - 1, 1]
            s_in = ex * (sy - ay) - ey * (sx - ax) >= 0.0
            for i in range(n_in):
                px = buf_in[i, 0]
                py = buf_in[i, 1]
                p_in = ex * (py - ay) - ey * (px - ax) >= 0.0
                if p_in != s_in:
                    dpx = sx - px
                    dpy = sy - py
                    n1 = ax * by - ay * bx
                    n2 = sx * py - sy * px
                    n3 = 1.0 / ((ax - bx) * dpy - (ay - by) * dpx)
                    buf_out[n_out, 0] = (n1 * dpx - n2 * (ax - bx)) * n3
                    buf_out[n_out, 1] = (n1 * dpy - n2 * (ay - by)) * n3
                    n_out += 1
                if p_in:
                    buf_out[n_out, 0] = px
                    buf_out[n_out, 1] = py
                    n_out += 1
                sx = px
                sy = py
                s_in = p_in
        return buf_out[:n_out].copy()

    NUMBA_KERNELS = KernelSet(
        "numba", _raster_counts_nb, _gauss_channel_nb, _clip_polygon_nb
    )


ACTIVE = NUMBA_KERNELS if backend.use_numba() else NUMPY_KERNELS


def available_kernel_sets():
    """All buildable kernel sets (for tests and benchmarks)."""
    sets = [NUMPY_KERNELS]
    if NUMBA_KERNELS is not None:
        sets.append(NUMBA_KERNELS)
    return sets
