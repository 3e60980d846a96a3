"""Canonical keypoint ordering and angle-interface statistics.

Vertex order carries the label assignment for keypoint targets, so two
nearly identical quads must never receive different orders. The
canonicalization here starts the ring at a vertex chosen from the
topmost point and the inclination of its trailing edge, switching start
vertex only when that inclination crosses a configurable interface
angle. Placing the interface in the least-populated 1-degree bin of a
dataset's angle histogram minimizes how many real instances sit near
the switch.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import EmptyHistogramError
from .geom import Quad, positively_oriented

N_BINS = 90


@dataclass(frozen=True)
class ReorderConfig:
    threshold_deg: float = 44.0

    def __post_init__(self):
        if not (math.isfinite(self.threshold_deg) and 0.0 <= self.threshold_deg < 90.0):
            raise ValueError("threshold_deg must lie in [0, 90)")


@dataclass(frozen=True)
class AngleHistogram:
    """Counts of first-edge angles over 90 one-degree bins."""

    bins: np.ndarray
    total: int

    def __post_init__(self):
        if self.bins.shape != (N_BINS,) or int(self.bins.sum()) != self.total:
            raise ValueError("bins must be 90 counts summing to total")


def _top_vertex_index(v: np.ndarray) -> int:
    """Topmost vertex (min y), resolving ties like the canonical rule.

    First occurrence of the minimum, stepped back one position when the
    previous vertex shares its ordinate, then remaining ties broken by
    smallest x.
    """
    ys = v[:, 1]
    min_y = ys.min()
    i = int(np.argmax(ys == min_y))
    if ys[(i - 1) % 4] == ys[i]:
        i = (i - 1) % 4
    tied = np.flatnonzero(ys == min_y)
    if tied.size > 1:
        i = int(tied[np.argmin(v[tied, 0])])
    return i


def first_edge_angle(q: Quad) -> Tuple[int, float]:
    """Index of the sort-start vertex and its trailing-edge angle.

    The ring is normalized to clockwise (raster frame) first. The angle
    is the inclination of the segment from the topmost vertex to its
    predecessor, folded into [0, 90) degrees; a vertical segment maps to
    the value just below 90 so it lands in bin 89 and exceeds any
    threshold below 90.
    """
    v = positively_oriented(q.vertices)
    i = _top_vertex_index(v)
    dx = v[i, 0] - v[(i - 1) % 4, 0]
    dy = v[i, 1] - v[(i - 1) % 4, 1]
    angle = math.degrees(math.atan2(abs(dy), abs(dx)))
    if angle >= 90.0:
        angle = math.nextafter(90.0, 0.0)
    return i, angle


def reorder_keypoints(q: Quad, cfg: ReorderConfig) -> Quad:
    """Cyclically rotate the (clockwise-normalized) ring to its canonical start.

    Starts at the topmost vertex when its trailing-edge angle exceeds
    the threshold, else at the following vertex. Idempotent, and
    invariant under cyclic shifts of the input.
    """
    v = positively_oriented(q.vertices)
    i, angle = first_edge_angle(q)
    start = i if angle > cfg.threshold_deg else (i + 1) % 4
    return Quad(np.roll(v, -start, axis=0))


def angle_histogram(dataset: Iterable[Quad]) -> AngleHistogram:
    bins = np.zeros(N_BINS, dtype=np.int64)
    total = 0
    for q in dataset:
        _, angle = first_edge_angle(q)
        bins[int(angle)] += 1
        total += 1
    return AngleHistogram(bins=bins, total=total)


def select_min_confusion_threshold(h: AngleHistogram) -> int:
    """Lower edge of the least-populated bin (ties: smallest index)."""
    if h.total <= 0:
        raise EmptyHistogramError("histogram has no samples")
    return int(np.argmin(h.bins))


def histogram_to_csv(h: AngleHistogram) -> str:
    lines = ["bin_deg,count"]
    lines += [f"{b},{int(c)}" for b, c in enumerate(h.bins)]
    return "\n".join(lines) + "\n"


def histogram_from_quads(quads: Sequence[Quad]) -> AngleHistogram:
    return angle_histogram(quads)
