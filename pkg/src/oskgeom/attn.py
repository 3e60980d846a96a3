"""Deterministic attention geometry: sampling patterns and fusion masks.

Sampling patterns describe where a rotation-aware deformable kernel
should read features around a keypoint: a cross-star along the two edge
directions at a vertex, a straight line along the edge at a midpoint.
Fusion masks select which cells of a 3x3 ROI split contribute local
features to each keypoint's fused representation.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeMismatchError

GRID_N = 3

# Cells are (row, col), 1-indexed. The first-vertex region is the
# left-top triangular half of the 3x3 split; the other vertex regions
# are its successive 90-degree rotations.
P0_MASK_CELLS = ((1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1))

# Midpoint regions: the 3-cell strip along the matching ROI side plus
# the center cell. Overridable through mff_masks(midpoint_cells=...).
MIDPOINT_MASK_CELLS = (
    ((1, 1), (1, 2), (1, 3), (2, 2)),  # top edge
    ((1, 3), (2, 3), (3, 3), (2, 2)),  # right edge
    ((3, 1), (3, 2), (3, 3), (2, 2)),  # bottom edge
    ((1, 1), (2, 1), (3, 1), (2, 2)),  # left edge
)

_ZERO_SNAP = 1e-12


@dataclass(frozen=True)
class SamplingPattern:
    """Offsets (dx, dy) in heatmap cells, centered on the keypoint."""

    offsets: np.ndarray

    def to_csv(self) -> str:
        lines = ["dx,dy"]
        lines += [f"{dx:.9g},{dy:.9g}" for dx, dy in self.offsets]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MaskSet:
    """8 binary 3x3 coefficient masks, one per keypoint."""

    masks: np.ndarray

    def to_text(self) -> str:
        blocks = []
        for k in range(self.masks.shape[0]):
            rows = [" ".join(str(int(v)) for v in row) for row in self.masks[k]]
            blocks.append(f"# keypoint {k}\n" + "\n".join(rows))
        return "\n\n".join(blocks) + "\n"


def _direction(angle: float) -> np.ndarray:
    d = np.array([math.cos(angle), math.sin(angle)])
    d[np.abs(d) < _ZERO_SNAP] = 0.0
    return d


def _arm_offsets(angle: float, arm_len: float, pts_per_arm: int) -> list:
    """Symmetric points along one direction, spaced arm_len/pts_per_arm."""
    d = _direction(angle)
    step = arm_len / pts_per_arm
    out = []
    for j in range(1, pts_per_arm + 1):
        out.append(j * step * d)
        out.append(-(j * step) * d)
    return out


def rcn_pattern_vertex(
    angles: Sequence[float], arm_len: float = 4.0, pts_per_arm: int = 2
) -> SamplingPattern:
    """Cross-star sampling pattern along two edge directions.

    Center point plus pts_per_arm points per side per direction:
    4*pts_per_arm + 1 offsets in total.
    """
    if arm_len < 1 or pts_per_arm < 1:
        raise ValueError("arm_len and pts_per_arm must be >= 1")
    a1, a2 = angles
    offsets = [np.zeros(2)]
    offsets += _arm_offsets(a1, arm_len, pts_per_arm)
    offsets += _arm_offsets(a2, arm_len, pts_per_arm)
    return SamplingPattern(np.array(offsets))


def rcn_pattern_edge(
    angle: float, arm_len: float = 4.0, pts_per_arm: int = 2
) -> SamplingPattern:
    """Straight-line sampling pattern along one edge direction."""
    if arm_len < 1 or pts_per_arm < 1:
        raise ValueError("arm_len and pts_per_arm must be >= 1")
    offsets = [np.zeros(2)]
    offsets += _arm_offsets(angle, arm_len, pts_per_arm)
    return SamplingPattern(np.array(offsets))


def _rotate_cells_cw(cells):
    """90-degree clockwise rotation of 1-indexed (row, col) cells."""
    return tuple((c, GRID_N + 1 - r) for r, c in cells)


def _cells_to_mask(cells) -> np.ndarray:
    mask = np.zeros((GRID_N, GRID_N), dtype=np.uint8)
    for r, c in cells:
        mask[r - 1, c - 1] = 1
    return mask


def mff_masks(threshold_deg: float = 44.0, midpoint_cells=None) -> MaskSet:
    """Fusion masks for the 8 keypoints on the 3x3 ROI split.

    The vertex masks are the fixed triangular regions where each
    reordered vertex concentrates (successive 90-degree rotations of
    the first-vertex region); the layout assumes a mid-range reorder
    interface, so ``threshold_deg`` is validated but does not change
    the cells. Midpoint regions default to side strip + center.
    """
    if not (0.0 <= threshold_deg < 90.0):
        raise ValueError("threshold_deg must lie in [0, 90)")
    masks = np.zeros((8, GRID_N, GRID_N), dtype=np.uint8)
    cells = P0_MASK_CELLS
    for k in range(4):
        masks[k] = _cells_to_mask(cells)
        cells = _rotate_cells_cw(cells)
    mid_cells = MIDPOINT_MASK_CELLS if midpoint_cells is None else midpoint_cells
    for k in range(4):
        masks[4 + k] = _cells_to_mask(mid_cells[k])
    return MaskSet(masks)


def mff_fuse(
    global_grid: np.ndarray,
    local_grids: np.ndarray,
    masks: MaskSet,
    k: int,
) -> np.ndarray:
    """Fused feature for keypoint k: sum of masked locals plus global.

    ``global_grid`` is (C, H, W); ``local_grids`` is (N, N, C, H, W)
    indexed by grid cell (row, col).
    """
    g = np.asarray(global_grid, dtype=np.float64)
    locals_ = np.asarray(local_grids, dtype=np.float64)
    if locals_.shape[:2] != (GRID_N, GRID_N) or locals_.shape[2:] != g.shape:
        raise ShapeMismatchError(
            f"local grids {locals_.shape} incompatible with global {g.shape}"
        )
    coeff = masks.masks[k].astype(np.float64)
    out = g.copy()
    for i in range(GRID_N):
        for j in range(GRID_N):
            if coeff[i, j]:
                out += locals_[i, j]
    return out
