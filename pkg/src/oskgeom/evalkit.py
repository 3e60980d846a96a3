"""Rotated-detection evaluation: greedy matching, AP, mAP, rotated NMS.

Matching follows the familiar VOC-style protocol: detections are taken
in descending score order and each claims the highest-IoU unmatched
non-difficult ground truth of its class at or above the IoU threshold.
Difficult ground truths neither count toward recall nor consume
matches. AP comes either from the 11-point interpolation or from the
full area under the interpolated precision envelope.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence

import numpy as np

from .errors import GeometryError, ParseError
from .geom import Quad, iou_exact, quad_from_points

DEFAULT_THRESHOLDS = tuple(np.arange(10, 20) / 20.0)  # 0.50 .. 0.95


@dataclass(frozen=True)
class Detection:
    quad: Quad
    score: float
    class_id: int

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError("score must lie in [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    quad: Quad
    class_id: int
    difficult: bool = False


@dataclass(frozen=True)
class ApEntry:
    class_id: int
    iou_thr: float
    ap: float
    precision: np.ndarray
    recall: np.ndarray


@dataclass
class EvalResult:
    entries: List[ApEntry] = field(default_factory=list)

    @property
    def mean_ap(self) -> float:
        if not self.entries:
            return 0.0
        return float(np.mean([e.ap for e in self.entries]))

    def ap_at(self, class_id: int, iou_thr: float) -> float:
        for e in self.entries:
            if e.class_id == class_id and abs(e.iou_thr - iou_thr) < 1e-9:
                return e.ap
        raise KeyError((class_id, iou_thr))

    def to_csv(self) -> str:
        lines = ["class,iou_thr,ap"]
        for e in self.entries:
            lines.append(f"{e.class_id},{e.iou_thr:.9g},{e.ap:.12g}")
        lines.append(f"mAP,all,{self.mean_ap:.12g}")
        return "\n".join(lines) + "\n"


def match_detections(
    dets: Sequence[Detection], gts: Sequence[GroundTruth], iou_thr: float
) -> np.ndarray:
    """TP/FP labels for one image's detections, aligned to input order.

    Ties in score keep input order; IoU ties go to the lowest ground
    truth index.
    """
    if not (0.0 < iou_thr < 1.0):
        raise ValueError("iou_thr must lie in (0, 1)")
    labels = np.zeros(len(dets), dtype=bool)
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    taken = [False] * len(gts)
    for di in order:
        det = dets[di]
        best_iou = 0.0
        best_gi = -1
        for gi, gt in enumerate(gts):
            if taken[gi] or gt.difficult or gt.class_id != det.class_id:
                continue
            iou = iou_exact(det.quad, gt.quad)
            if iou > best_iou:
                best_iou = iou
                best_gi = gi
        if best_gi >= 0 and best_iou >= iou_thr:
            labels[di] = True
            taken[best_gi] = True
    return labels


def average_precision(
    labels: np.ndarray, scores: np.ndarray, num_gt: int, method: str = "voc07"
) -> float:
    """AP from per-detection TP labels and scores.

    method "voc07": mean of the max precision at the 11 recall points
    {0, 0.1, ..., 1.0}. method "allpoints": area under the interpolated
    precision-recall curve.
    """
    if method not in ("voc07", "allpoints"):
        raise ValueError("method must be 'voc07' or 'allpoints'")
    labels = np.asarray(labels, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape:
        raise ValueError("labels and scores must align")
    if num_gt <= 0 or labels.size == 0:
        return 0.0
    order = np.argsort(-scores, kind="stable")
    tp = np.cumsum(labels[order])
    fp = np.cumsum(~labels[order])
    recall = tp / num_gt
    precision = tp / np.maximum(tp + fp, 1)

    if method == "voc07":
        ap = 0.0
        for t in np.arange(11) / 10.0:
            mask = recall >= t
            ap += float(precision[mask].max()) if mask.any() else 0.0
        return ap / 11.0

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    changed = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


def _pr_curve(labels, scores, num_gt):
    order = np.argsort(-np.asarray(scores), kind="stable")
    lab = np.asarray(labels, dtype=bool)[order]
    tp = np.cumsum(lab)
    fp = np.cumsum(~lab)
    recall = tp / max(num_gt, 1)
    precision = tp / np.maximum(tp + fp, 1)
    return precision, recall


def map_over_thresholds(
    gts_by_image: Mapping[str, Sequence[GroundTruth]],
    dets_by_image: Mapping[str, Sequence[Detection]],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    method: str = "voc07",
) -> EvalResult:
    """Per-class AP at each threshold; mAP over classes then thresholds.

    Classes are those carrying at least one non-difficult ground truth;
    detections of any other class are ignored.
    """
    class_ids = sorted(
        {
            gt.class_id
            for gts in gts_by_image.values()
            for gt in gts
            if not gt.difficult
        }
    )
    image_ids = sorted(set(gts_by_image) | set(dets_by_image))
    result = EvalResult()
    for thr in thresholds:
        per_image_labels = {
            img: match_detections(
                list(dets_by_image.get(img, ())), list(gts_by_image.get(img, ())), thr
            )
            for img in image_ids
        }
        for cid in class_ids:
            labels, scores = [], []
            num_gt = 0
            for img in image_ids:
                dets = list(dets_by_image.get(img, ()))
                gts = list(gts_by_image.get(img, ()))
                num_gt += sum(1 for g in gts if g.class_id == cid and not g.difficult)
                lab = per_image_labels[img]
                for i, det in enumerate(dets):
                    if det.class_id == cid:
                        labels.append(bool(lab[i]))
                        scores.append(det.score)
            labels = np.array(labels, dtype=bool)
            scores = np.array(scores, dtype=np.float64)
            ap = average_precision(labels, scores, num_gt, method)
            precision, recall = _pr_curve(labels, scores, num_gt)
            result.entries.append(ApEntry(cid, float(thr), ap, precision, recall))
    return result


def rotated_nms(dets: Sequence[Detection], nms_thr: float) -> List[Detection]:
    """Greedy same-class suppression by exact IoU, descending score."""
    if not (0.0 < nms_thr < 1.0):
        raise ValueError("nms_thr must lie in (0, 1)")
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    kept: List[int] = []
    for i in order:
        suppressed = False
        for j in kept:
            if dets[j].class_id != dets[i].class_id:
                continue
            if iou_exact(dets[i].quad, dets[j].quad) >= nms_thr:
                suppressed = True
                break
        if not suppressed:
            kept.append(i)
    return [dets[i] for i in kept]


# ---------------------------------------------------------------------------
# detections text format: image_id class_id score x1 y1 ... x4 y4
# ---------------------------------------------------------------------------


def format_detection_line(image_id: str, det: Detection) -> str:
    coords = " ".join(f"{c:.9g}" for c in det.quad.vertices.ravel())
    return f"{image_id} {det.class_id} {det.score:.9g} {coords}"


def write_detections(path, dets_by_image: Mapping[str, Sequence[Detection]]) -> None:
    lines = []
    for image_id in sorted(dets_by_image):
        for det in dets_by_image[image_id]:
            lines.append(format_detection_line(image_id, det))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def read_detections(path) -> Dict[str, List[Detection]]:
    out: Dict[str, List[Detection]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 11:
                raise ParseError(f"expected 11 tokens, got {len(tokens)}", lineno)
            image_id = tokens[0]
            try:
                class_id = int(tokens[1])
                score = float(tokens[2])
                coords = [float(t) for t in tokens[3:]]
            except ValueError as exc:
                raise ParseError(f"bad numeric field: {exc}", lineno) from None
            try:
                quad = quad_from_points(np.array(coords).reshape(4, 2))
                det = Detection(quad=quad, score=score, class_id=class_id)
            except (GeometryError, ValueError) as exc:
                raise ParseError(f"invalid detection: {exc}", lineno) from None
            out.setdefault(image_id, []).append(det)
    return out
