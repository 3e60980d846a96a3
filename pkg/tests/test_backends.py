"""Numba and numpy kernel paths must agree on the same inputs."""

import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_convex_quad
from oskgeom import kernels
from oskgeom.geom import positively_oriented, signed_area

needs_numba = pytest.mark.skipif(
    kernels.NUMBA_KERNELS is None, reason="numba not available"
)


def _grid_for(a, b, res):
    pts = np.vstack([a.vertices, b.vertices])
    minx, miny = pts[:, 0].min(), pts[:, 1].min()
    maxx, maxy = pts[:, 0].max(), pts[:, 1].max()
    return minx, miny, (maxx - minx) / res, (maxy - miny) / res


@needs_numba
def test_raster_counts_agree(rng):
    for _ in range(30):
        a, b = random_convex_quad(rng), random_convex_quad(rng)
        minx, miny, dx, dy = _grid_for(a, b, 512)
        args = (a.vertices.copy(), b.vertices.copy(), minx, miny, dx, dy, 512)
        nb = kernels.NUMBA_KERNELS.raster_counts(*args)
        py = kernels.NUMPY_KERNELS.raster_counts(*args)
        assert nb == py


@needs_numba
def test_gauss_channels_agree(rng):
    for _ in range(20):
        mux, muy = rng.uniform(5, 50, 2)
        comps = np.array(
            [
                [np.cos(t), np.sin(t), 1.0 / 5.76, 1.0 / 0.64]
                for t in rng.uniform(0, np.pi, 2)
            ]
        )
        nb = kernels.NUMBA_KERNELS.gauss_channel(56, mux, muy, comps)
        py = kernels.NUMPY_KERNELS.gauss_channel(56, mux, muy, comps)
        assert np.abs(nb - py).max() <= 1e-12


@needs_numba
def test_clip_polygons_agree(rng):
    for _ in range(30):
        a = positively_oriented(random_convex_quad(rng).vertices)
        b = positively_oriented(random_convex_quad(rng).vertices)
        nb = kernels.NUMBA_KERNELS.clip_polygon(a, b)
        py = kernels.NUMPY_KERNELS.clip_polygon(a, b)
        assert nb.shape == py.shape
        if nb.size:
            assert np.abs(nb - py).max() <= 1e-9
            assert abs(signed_area(nb) - signed_area(py)) <= 1e-9


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_env_flag_selects_backend(backend):
    if backend == "numba" and kernels.NUMBA_KERNELS is None:
        pytest.skip("numba not available")
    env = dict(os.environ, OSKGEOM_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", "import oskgeom; print(oskgeom.ACTIVE_BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert out.returncode == 0
    assert out.stdout.strip() == backend


def test_unknown_backend_rejected():
    env = dict(os.environ, OSKGEOM_BACKEND="cuda")
    out = subprocess.run(
        [sys.executable, "-c", "import oskgeom"], capture_output=True, text=True, env=env
    )
    assert out.returncode != 0
