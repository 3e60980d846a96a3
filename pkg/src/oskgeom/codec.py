"""Keypoint heatmap codec for rotated quads.

An instance is encoded as K=8 channels (4 vertices, 4 edge midpoints) of
an M x M grid rendered over an expanded ROI. Each keypoint contributes
a rotated anisotropic Gaussian whose larger spread lies along the
adjacent edge direction(s); vertices combine their two edge directions
by elementwise max. With ``aspect_scale`` 1 (or mode "sgh") the
encoding degrades to the standard isotropic Gaussian heatmap.

Grid geometry: cell (i, j) of a channel samples the continuous grid
coordinate (x=j, y=i); keypoints map to real-valued grid coordinates
with no half-cell shift. Non-zero channels are normalized so their
grid maximum is exactly 1.0 (targets feed a binary cross entropy loss,
so values must stay in [0, 1]).
"""

import math
import struct
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from .errors import GeometryError, InvalidHeatmapError, ShapeMismatchError
from .geom import Quad, edge_inclinations, quad_from_points
from .kernels import ACTIVE as _K

K_CHANNELS = 8
LOG_CLAMP = 1e-12
HEATMAP_MAGIC = b"OSKH"
HEATMAP_VERSION = 1


@dataclass(frozen=True)
class Roi:
    """Axis-aligned region of interest, top-left anchored."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.x, self.y, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("roi fields must be finite")
        if self.w <= 0 or self.h <= 0:
            raise ValueError("roi must have positive width and height")


@dataclass(frozen=True)
class OshConfig:
    """Encoding hyperparameters.

    sigma is the Gaussian standard deviation perpendicular to the edge,
    expressed in heatmap cells; the spread along the edge is
    aspect_scale * sigma. mode "sgh" forces isotropy regardless of
    aspect_scale.
    """

    expansion_ratio: float = 0.25
    heatmap_size: int = 56
    sigma: float = 0.8
    aspect_scale: float = 3.0
    mode: str = "osh"

    def __post_init__(self):
        if self.expansion_ratio < 0:
            raise ValueError("expansion_ratio must be >= 0")
        if self.heatmap_size < 8:
            raise ValueError("heatmap_size must be >= 8")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.aspect_scale < 1:
            raise ValueError("aspect_scale must be >= 1")
        if self.mode not in ("osh", "sgh"):
            raise ValueError("mode must be 'osh' or 'sgh'")

    @property
    def effective_aspect(self) -> float:
        return 1.0 if self.mode == "sgh" else self.aspect_scale


@dataclass(frozen=True)
class Heatmap:
    """K x M x M target values in [0, 1]."""

    values: np.ndarray

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def size(self) -> int:
        return self.values.shape[1]


def expand_roi(roi: Roi, expansion_ratio: float) -> Roi:
    """Grow the ROI about its center by a factor (1 + ratio) per axis."""
    r = expansion_ratio
    return Roi(
        x=roi.x - 0.5 * r * roi.w,
        y=roi.y - 0.5 * r * roi.h,
        w=(1.0 + r) * roi.w,
        h=(1.0 + r) * roi.h,
    )


def map_to_heatmap(p, expanded: Roi, m: int) -> Tuple[float, float]:
    """Image-space point -> real-valued heatmap grid coordinates."""
    x, y = float(p[0]), float(p[1])
    return (x - expanded.x) * m / expanded.w, (y - expanded.y) * m / expanded.h


def rotate_covariance(sigma: float, aspect_scale: float, theta: float) -> np.ndarray:
    """Covariance of the direction-aligned Gaussian, rotated by theta.

    Base covariance is diag((aspect_scale*sigma)^2, sigma^2); the result
    is the symmetric positive-definite matrix R^T diag R for the plain
    rotation matrix R(theta).
    """
    if sigma <= 0 or aspect_scale < 1:
        raise ValueError("sigma must be > 0 and aspect_scale >= 1")
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    base = np.diag([(aspect_scale * sigma) ** 2, sigma**2])
    return rot.T @ base @ rot


def mapped_keypoints(q: Quad, roi: Roi, cfg: OshConfig):
    """Keypoints (8, 2) and edge inclinations (4,) in grid coordinates.

    Angles are measured on the mapped vertices, so an anisotropic ROI
    scale is reflected in the Gaussian orientation.
    """
    ex = expand_roi(roi, cfg.expansion_ratio)
    m = cfg.heatmap_size
    v = q.vertices
    mids = 0.5 * (v + np.roll(v, -1, axis=0))
    pts = np.vstack([v, mids])
    grid = np.empty_like(pts)
    grid[:, 0] = (pts[:, 0] - ex.x) * m / ex.w
    grid[:, 1] = (pts[:, 1] - ex.y) * m / ex.h
    incl = edge_inclinations(grid[:4])
    return grid, incl


def _channel_components(cfg: OshConfig, incl: np.ndarray, k: int) -> np.ndarray:
    """(n, 4) rows of cos/sin/inv-variance pairs for channel k.

    A vertex channel carries its two adjacent edge directions; a
    midpoint channel the single direction of its edge. The along-edge
    axis receives the larger spread aspect_scale * sigma.
    """
    iv_along = 1.0 / (cfg.effective_aspect * cfg.sigma) ** 2
    iv_perp = 1.0 / cfg.sigma**2
    if k < 4:
        thetas = (incl[k], incl[(k - 1) % 4])
    else:
        thetas = (incl[k - 4],)
    return np.array(
        [[math.cos(t), math.sin(t), iv_along, iv_perp] for t in thetas]
    )


def encode(q: Quad, roi: Roi, cfg: OshConfig) -> Heatmap:
    """Render the 8-channel keypoint heatmap for one quad on one ROI.

    Channels whose keypoint maps outside [0, M) x [0, M) are all zero;
    every other channel is scaled so its grid maximum is exactly 1.
    """
    m = cfg.heatmap_size
    grid, incl = mapped_keypoints(q, roi, cfg)
    out = np.zeros((K_CHANNELS, m, m))
    for k in range(K_CHANNELS):
        mux, muy = grid[k]
        if not (0.0 <= mux < m and 0.0 <= muy < m):
            continue
        comps = _channel_components(cfg, incl, k)
        vals = _K.gauss_channel(m, mux, muy, comps)
        out[k] = vals / vals.max()
    return Heatmap(out)


def channel_field(q: Quad, roi: Roi, cfg: OshConfig, k: int, points) -> np.ndarray:
    """Continuous encoding field of channel k at image-space points.

    This is the underlying peak-normalized Gaussian surface (maximum 1
    at the keypoint itself), without the discrete grid-max rescaling
    that `encode` applies; out-of-ROI zeroing is not applied either.
    """
    m = cfg.heatmap_size
    ex = expand_roi(roi, cfg.expansion_ratio)
    grid, incl = mapped_keypoints(q, roi, cfg)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    gx = (pts[:, 0] - ex.x) * m / ex.w - grid[k, 0]
    gy = (pts[:, 1] - ex.y) * m / ex.h - grid[k, 1]
    vals = np.zeros(pts.shape[0])
    for c, s, iv_along, iv_perp in _channel_components(cfg, incl, k):
        u = c * gx + s * gy
        v = -s * gx + c * gy
        np.maximum(vals, np.exp(-0.5 * (u * u * iv_along + v * v * iv_perp)), vals)
    return vals


def _check_shapes(logits, target):
    logits = np.asarray(logits, dtype=np.float64)
    tvals = target.values if isinstance(target, Heatmap) else np.asarray(target)
    tvals = tvals.astype(np.float64, copy=False)
    if logits.shape != tvals.shape:
        raise ShapeMismatchError(f"logits {logits.shape} vs target {tvals.shape}")
    return logits, tvals


def bce_loss(logits, target) -> float:
    """Mean binary cross entropy of sigmoid(logits) against the target.

    Logs are clamped at 1e-12 so the loss stays finite for any finite
    logits.
    """
    logits, tvals = _check_shapes(logits, target)
    p = expit(logits)
    loss = -tvals * np.log(np.maximum(p, LOG_CLAMP))
    loss -= (1.0 - tvals) * np.log(np.maximum(1.0 - p, LOG_CLAMP))
    return float(loss.mean())


def bce_grad(logits, target) -> np.ndarray:
    """Analytic d(loss)/d(logits): (sigmoid(z) - target) / N."""
    logits, tvals = _check_shapes(logits, target)
    return (expit(logits) - tvals) / logits.size


def extract_peak(channel: np.ndarray, score_floor: float = 0.05):
    """Locate a channel's peak with 3x3 weighted-centroid refinement.

    Returns (x, y, score) in grid coordinates, or None when the maximum
    falls below ``score_floor``.
    """
    ch = np.asarray(channel, dtype=np.float64)
    m_rows, m_cols = ch.shape
    flat = int(np.argmax(ch))
    i, j = divmod(flat, m_cols)
    score = float(ch[i, j])
    if score < score_floor:
        return None
    r0, r1 = max(0, i - 1), min(m_rows, i + 2)
    c0, c1 = max(0, j - 1), min(m_cols, j + 2)
    window = ch[r0:r1, c0:c1]
    wsum = window.sum()
    cols = np.arange(c0, c1, dtype=np.float64)
    rows = np.arange(r0, r1, dtype=np.float64)
    x = float((window.sum(axis=0) * cols).sum() / wsum)
    y = float((window.sum(axis=1) * rows).sum() / wsum)
    return x, y, score


def _fuse_vertices(verts: np.ndarray, mids: dict, lam: float) -> np.ndarray:
    """Least-squares vertex adjustment toward midpoint consistency.

    Minimizes |v - v_peak|^2 + lam * sum_k |m_k - (v_k + v_{k+1})/2|^2
    over the present midpoints; x and y decouple into one 4x4 solve.
    """
    if lam <= 0.0 or not mids:
        return verts
    rows = []
    targets = []
    for k, mk in sorted(mids.items()):
        row = np.zeros(4)
        row[k] = 0.5
        row[(k + 1) % 4] = 0.5
        rows.append(row)
        targets.append(mk)
    a = np.array(rows)
    mt = np.array(targets)
    lhs = np.eye(4) + lam * (a.T @ a)
    rhs = verts + lam * (a.T @ mt)
    return np.linalg.solve(lhs, rhs)


def decode(
    hm: Heatmap,
    roi: Roi,
    cfg: OshConfig,
    fuse_midpoints: bool = True,
    lam: float = 1.0,
    score_floor: float = 0.05,
) -> Optional[Tuple[Quad, float]]:
    """Recover a quad from an 8-channel heatmap rendered on ``roi``.

    Vertex peaks are mapped back to image space by inverting the
    ROI-expansion and grid mapping; midpoint peaks optionally pull the
    vertices through a closed-form least-squares fusion. Returns None
    when any vertex channel has no peak, or when the recovered geometry
    is degenerate.

    Raises:
        InvalidHeatmapError: values outside [0, 1] beyond 1e-6.
    """
    vals = hm.values
    if vals.shape[0] != K_CHANNELS or vals.shape[1] != cfg.heatmap_size:
        raise InvalidHeatmapError(
            f"expected ({K_CHANNELS}, {cfg.heatmap_size}, {cfg.heatmap_size}) heatmap, got {vals.shape}"
        )
    if float(vals.min()) < -1e-6 or float(vals.max()) > 1.0 + 1e-6:
        raise InvalidHeatmapError("heatmap values outside [0, 1]")

    peaks = [extract_peak(vals[k], score_floor) for k in range(K_CHANNELS)]
    if any(peaks[k] is None for k in range(4)):
        return None
    score = sum(p[2] for p in peaks if p is not None) / K_CHANNELS

    ex = expand_roi(roi, cfg.expansion_ratio)
    m = cfg.heatmap_size

    def to_image(px, py):
        return px * ex.w / m + ex.x, py * ex.h / m + ex.y

    verts = np.array([to_image(peaks[k][0], peaks[k][1]) for k in range(4)])
    if fuse_midpoints:
        mids = {
            k - 4: np.array(to_image(peaks[k][0], peaks[k][1]))
            for k in range(4, K_CHANNELS)
            if peaks[k] is not None
        }
        verts = _fuse_vertices(verts, mids, lam)

    try:
        quad = quad_from_points(verts)
    except GeometryError:
        return None
    return quad, float(score)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def write_heatmap(path, hm: Heatmap) -> None:
    """Binary heatmap file: 'OSKH' | u8 version | u8 K | u16le M | f32le data."""
    k, m = hm.k, hm.size
    header = struct.pack("<4sBBH", HEATMAP_MAGIC, HEATMAP_VERSION, k, m)
    data = np.ascontiguousarray(hm.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


def read_heatmap(path) -> Heatmap:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8:
        raise InvalidHeatmapError("heatmap file truncated")
    magic, version, k, m = struct.unpack_from("<4sBBH", blob, 0)
    if magic != HEATMAP_MAGIC:
        raise InvalidHeatmapError("bad magic; not a heatmap file")
    if version != HEATMAP_VERSION:
        raise InvalidHeatmapError(f"unsupported heatmap version {version}")
    expected = 8 + 4 * k * m * m
    if len(blob) != expected:
        raise InvalidHeatmapError(
            f"heatmap payload length {len(blob)} != expected {expected}"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=8).astype(np.float64)
    return Heatmap(values.reshape(k, m, m))


def write_pgm(path, channel: np.ndarray) -> None:
    """One channel as a binary PGM (P5, maxval 255), value = round(255*h)."""
    ch = np.asarray(channel)
    h, w = ch.shape
    data = np.rint(255.0 * ch).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
