"""Annotation parsing, synthetic scene generation, dataset files.

Synthetic generation is driven by an explicitly specified 64-bit PRNG
(splitmix64) rather than any platform default, so fixtures are
byte-reproducible across machines, Python versions, and library
upgrades.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import GeometryError, ParseError
from .evalkit import Detection
from .geom import Quad, quad_from_points

DATASET_HEADER = "oskgeom-dataset v1"

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 PRNG: 64-bit state advanced by the golden-gamma constant.

    next_u64: state += 0x9E3779B97F4A7C15; z = state;
              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
              z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
              return z ^ (z >> 31)

    Uniform doubles take the top 53 bits; normals use Box-Muller with a
    cached spare.
    """

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare: Optional[float] = None

    def next_u64(self) -> int:
        self._state = (self._state + self.GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * 2.0**-53
        return lo + u * (hi - lo)

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        if self._spare is not None:
            z = self._spare
            self._spare = None
        else:
            while True:
                u1 = self.uniform()
                if u1 > 0.0:
                    break
            u2 = self.uniform()
            r = math.sqrt(-2.0 * math.log(u1))
            z = r * math.cos(2.0 * math.pi * u2)
            self._spare = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * z


# ---------------------------------------------------------------------------
# angle laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformAngles:
    lo: float = 0.0
    hi: float = 90.0

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi <= 90.0):
            raise ValueError("need 0 <= lo < hi <= 90")

    def sample(self, rng: SplitMix64) -> float:
        return rng.uniform(self.lo, self.hi)

    def bin_probabilities(self) -> np.ndarray:
        edges = np.arange(91, dtype=np.float64)
        width = np.clip(np.minimum(edges[1:], self.hi) - np.maximum(edges[:-1], self.lo), 0, None)
        return width / (self.hi - self.lo)


@dataclass(frozen=True)
class GappedAngles:
    """Uniform over [lo, hi) with the band [gap_lo, gap_hi) excluded."""

    lo: float = 0.0
    hi: float = 90.0
    gap_lo: float = 44.0
    gap_hi: float = 45.0

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.gap_lo < self.gap_hi <= self.hi <= 90.0):
            raise ValueError("need lo <= gap_lo < gap_hi <= hi within [0, 90]")

    def sample(self, rng: SplitMix64) -> float:
        left = self.gap_lo - self.lo
        right = self.hi - self.gap_hi
        u = rng.uniform(0.0, left + right)
        return self.lo + u if u < left else self.gap_hi + (u - left)

    def bin_probabilities(self) -> np.ndarray:
        edges = np.arange(91, dtype=np.float64)
        lo_w = np.clip(np.minimum(edges[1:], self.gap_lo) - np.maximum(edges[:-1], self.lo), 0, None)
        hi_w = np.clip(np.minimum(edges[1:], self.hi) - np.maximum(edges[:-1], self.gap_hi), 0, None)
        width = lo_w + hi_w
        return width / width.sum()


@dataclass(frozen=True)
class PeakedAngles:
    """Normal(center, width) rejected into [0, 90)."""

    center: float = 44.0
    width: float = 8.0

    def __post_init__(self):
        if not (0.0 <= self.center < 90.0 and self.width > 0.0):
            raise ValueError("center must lie in [0, 90) and width be positive")

    def sample(self, rng: SplitMix64) -> float:
        while True:
            a = rng.normal(self.center, self.width)
            if 0.0 <= a < 90.0:
                return a

    def bin_probabilities(self) -> np.ndarray:
        def cdf(x):
            return 0.5 * (1.0 + math.erf((x - self.center) / (self.width * math.sqrt(2.0))))

        edges = np.arange(91, dtype=np.float64)
        mass = np.array([cdf(edges[i + 1]) - cdf(edges[i]) for i in range(90)])
        return mass / (cdf(90.0) - cdf(0.0))


AngleLaw = Union[UniformAngles, GappedAngles, PeakedAngles]


@dataclass(frozen=True)
class ScoreLaw:
    """score = clamp(1 - coeff * mean_jitter + Normal(0, noise_std))."""

    coeff: float = 0.1
    noise_std: float = 0.05


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    count: int = 100
    angle_law: AngleLaw = field(default_factory=UniformAngles)
    size_range: Tuple[float, float] = (32.0, 256.0)
    aspect_range: Tuple[float, float] = (1.0, 4.0)
    jitter: float = 1.0
    score_law: ScoreLaw = field(default_factory=ScoreLaw)
    canvas: float = 2048.0

    def __post_init__(self):
        if self.count <= 0:
            raise ValueError("count must be positive")
        if not (0.0 < self.size_range[0] <= self.size_range[1]):
            raise ValueError("size_range must be positive and ordered")
        if not (1.0 <= self.aspect_range[0] <= self.aspect_range[1]):
            raise ValueError("aspect_range must be >= 1 and ordered")
        if self.jitter < 0.0:
            raise ValueError("jitter must be >= 0")


@dataclass(frozen=True)
class AnnotationRecord:
    quad: Quad
    category: str
    difficult: bool = False

    def __post_init__(self):
        if not self.category:
            raise ValueError("category must be non-empty")


def rect_quad(cx: float, cy: float, w: float, h: float, angle_deg: float) -> Quad:
    """Rotated rectangle whose canonical first-edge angle equals angle_deg.

    The clockwise corner ring (top-left, top-right, bottom-right,
    bottom-left) is spun about the center so that the topmost vertex's
    trailing edge has the requested inclination; angle 0 produces the
    axis-aligned rectangle.
    """
    b = math.radians(angle_deg)
    c, s = math.cos(b), math.sin(b)
    corners = np.array(
        [[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]]
    )
    rot = np.array([[c, s], [-s, c]])
    return quad_from_points(corners @ rot.T + (cx, cy))


def synth_dataset(cfg: SynthConfig) -> Tuple[List[AnnotationRecord], List[Detection]]:
    """Deterministic rotated-rectangle scene with jittered detections.

    Ground truths are clean rectangles whose first-edge angles follow
    cfg.angle_law; each detection perturbs one ground truth's vertices
    with isotropic Gaussian noise and scores it by the score law. The
    same seed always yields the same records.
    """
    rng = SplitMix64(cfg.seed)
    records: List[AnnotationRecord] = []
    detections: List[Detection] = []
    for _ in range(cfg.count):
        angle = cfg.angle_law.sample(rng)
        size = rng.uniform(*cfg.size_range)
        aspect = rng.uniform(*cfg.aspect_range)
        w, h = size, size / aspect
        margin = 0.5 * math.hypot(w, h)
        cx = rng.uniform(margin, cfg.canvas - margin)
        cy = rng.uniform(margin, cfg.canvas - margin)
        gt = rect_quad(cx, cy, w, h, angle)
        records.append(AnnotationRecord(quad=gt, category="object", difficult=False))

        for _attempt in range(100):
            noise = np.array(
                [[rng.normal(0.0, cfg.jitter), rng.normal(0.0, cfg.jitter)] for _ in range(4)]
            )
            try:
                det_quad = quad_from_points(gt.vertices + noise)
                break
            except GeometryError:
                continue
        else:
            det_quad = gt
            noise = np.zeros((4, 2))
        mean_jitter = float(np.hypot(noise[:, 0], noise[:, 1]).mean())
        raw = 1.0 - cfg.score_law.coeff * mean_jitter + rng.normal(0.0, cfg.score_law.noise_std)
        score = min(1.0, max(0.0, raw))
        detections.append(Detection(quad=det_quad, score=score, class_id=0))
    return records, detections


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------


def _parse_annotation_row(tokens, lineno) -> AnnotationRecord:
    if len(tokens) != 10:
        raise ParseError(f"expected 10 tokens, got {len(tokens)}", lineno)
    try:
        coords = [float(t) for t in tokens[:8]]
    except ValueError:
        raise ParseError("non-numeric coordinate", lineno) from None
    category = tokens[8]
    if tokens[9] not in ("0", "1"):
        raise ParseError(f"difficult flag must be 0 or 1, got {tokens[9]!r}", lineno)
    try:
        quad = quad_from_points(np.array(coords).reshape(4, 2))
    except GeometryError as exc:
        raise ParseError(f"invalid quad geometry: {exc}", lineno) from None
    return AnnotationRecord(quad=quad, category=category, difficult=tokens[9] == "1")


def parse_dota(text: str) -> List[AnnotationRecord]:
    """Parse DOTA-style annotation text.

    Metadata lines starting with 'imagesource' or 'gsd' are skipped;
    every other non-blank line must read
    ``x1 y1 x2 y2 x3 y3 x4 y4 category difficult``.
    """
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("imagesource") or line.startswith("gsd"):
            continue
        records.append(_parse_annotation_row(line.split(), lineno))
    return records


def serialize_records(records: Sequence[AnnotationRecord]) -> str:
    lines = [DATASET_HEADER]
    for rec in records:
        coords = " ".join(f"{c:.9g}" for c in rec.quad.vertices.ravel())
        lines.append(f"{coords} {rec.category} {int(rec.difficult)}")
    return "\n".join(lines) + "\n"


def write_dataset(path, records: Sequence[AnnotationRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_records(records))


def read_dataset(path) -> List[AnnotationRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != DATASET_HEADER:
        raise ParseError(f"missing '{DATASET_HEADER}' header", 1)
    records = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        records.append(_parse_annotation_row(line.split(), lineno))
    return records


def load_annotations(path) -> List[AnnotationRecord]:
    """Read either the internal dataset format or raw DOTA text."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    first = text.splitlines()[0].strip() if text.splitlines() else ""
    if first == DATASET_HEADER:
        records = []
        for lineno, raw in enumerate(text.splitlines()[1:], start=2):
            line = raw.strip()
            if line:
                records.append(_parse_annotation_row(line.split(), lineno))
        return records
    return parse_dota(text)


def category_ids(records: Sequence[AnnotationRecord]) -> Dict[str, int]:
    """Deterministic category -> class id mapping (sorted names)."""
    return {name: i for i, name in enumerate(sorted({r.category for r in records}))}
