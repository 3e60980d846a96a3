"""Command-line front end.

Subcommands cover the full pipeline: synthetic data generation,
heatmap encode/decode/round-trip, angle statistics and attention
geometry exports, IoU queries, rotated NMS, and AP evaluation. Every
randomized subcommand takes an explicit --seed and produces
byte-identical outputs for identical inputs and flags.

Exit codes: 0 success, 2 usage error, 3 input parse error, 4
numeric/geometry error.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import attn, codec, dataio, evalkit, reorder
from .codec import OshConfig, Roi
from .errors import GeometryError, InvalidHeatmapError, OskgeomError, ParseError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


def _parse_floats(text: str, n: int, what: str):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"{what} contains a non-numeric value") from None


def _quad_from_flag(text: str, what: str):
    from .geom import quad_from_points

    vals = _parse_floats(text, 8, what)
    return quad_from_points(np.array(vals).reshape(4, 2))


def _angle_law_from_flag(text: str):
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    if name == "uniform":
        lo, hi = _parse_floats(rest, 2, "--angle-law uniform")
        return dataio.UniformAngles(lo, hi)
    if name == "gapped":
        lo, hi, glo, ghi = _parse_floats(rest, 4, "--angle-law gapped")
        return dataio.GappedAngles(lo, hi, glo, ghi)
    if name == "peaked":
        center, width = _parse_floats(rest, 2, "--angle-law peaked")
        return dataio.PeakedAngles(center, width)
    raise UsageError(f"unknown angle law {name!r} (uniform|gapped|peaked)")


def _osh_config(args) -> OshConfig:
    return OshConfig(
        expansion_ratio=args.expansion_ratio,
        heatmap_size=args.heatmap_size,
        sigma=args.sigma,
        aspect_scale=args.aspect_scale,
        mode=args.mode,
    )


def _add_codec_flags(p):
    p.add_argument("--sigma", type=float, default=0.8, help="Gaussian std, heatmap cells")
    p.add_argument("--aspect-scale", type=float, default=3.0, help="along-edge spread factor")
    p.add_argument("--heatmap-size", type=int, default=56, help="grid size M")
    p.add_argument("--expansion-ratio", type=float, default=0.25, help="ROI expansion ratio")
    p.add_argument("--mode", choices=["osh", "sgh"], default="osh", help="encoding mode")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _gt_by_image(path: Path):
    """Ground-truth annotations keyed by image id (file stem)."""
    files = sorted(path.glob("*.txt")) if path.is_dir() else [path]
    if not files:
        raise ParseError(f"no annotation files under {path}")
    return {f.stem: dataio.load_annotations(f) for f in files}


# ---------------------------------------------------------------------------
# codec workflows
# ---------------------------------------------------------------------------


def cmd_encode(args) -> int:
    out = _out_dir(args)
    cfg = _osh_config(args)
    records = dataio.load_annotations(Path(args.gt))
    cat_ids = dataio.category_ids(records)
    image_id = Path(args.gt).stem
    fixed_roi = Roi(*_parse_floats(args.roi, 4, "--roi")) if args.roi else None

    manifest = ["file,image_id,class_id,x,y,w,h"]
    for idx, rec in enumerate(records):
        if fixed_roi is not None:
            roi = fixed_roi
        else:
            x0, y0, x1, y1 = rec.quad.bbox()
            roi = Roi(x0, y0, x1 - x0, y1 - y0)
        hm = codec.encode(rec.quad, roi, cfg)
        name = f"hm_{idx:05d}.oskh"
        codec.write_heatmap(out / name, hm)
        if args.pgm:
            for k in range(hm.k):
                codec.write_pgm(out / f"hm_{idx:05d}_ch{k}.pgm", hm.values[k])
        manifest.append(
            f"{name},{image_id},{cat_ids[rec.category]},"
            f"{roi.x:.9g},{roi.y:.9g},{roi.w:.9g},{roi.h:.9g}"
        )
    (out / "manifest.csv").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    print(f"encoded {len(records)} instances -> {out}")
    return EXIT_OK


def cmd_decode(args) -> int:
    src = Path(args.heatmaps)
    manifest = src / "manifest.csv"
    if not manifest.is_file():
        raise ParseError(f"missing manifest: {manifest}")
    cfg = _osh_config(args)
    dets_by_image = {}
    lines = manifest.read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise ParseError("manifest row needs 7 fields", lineno)
        name, image_id, class_id = parts[0], parts[1], int(parts[2])
        roi = Roi(*(float(v) for v in parts[3:]))
        hm = codec.read_heatmap(src / name)
        decoded = codec.decode(
            hm, roi, cfg, fuse_midpoints=not args.no_fuse,
            lam=args.fusion_lambda, score_floor=args.score_floor,
        )
        if decoded is None:
            continue
        quad, score = decoded
        dets_by_image.setdefault(image_id, []).append(
            evalkit.Detection(quad=quad, score=score, class_id=class_id)
        )
    evalkit.write_detections(args.out, dets_by_image)
    n = sum(len(v) for v in dets_by_image.values())
    print(f"decoded {n} detections -> {args.out}")
    return EXIT_OK


def _roundtrip_errors(cfg: OshConfig, count: int, seed: int):
    """Per-vertex |error| arrays in pixels and in cell pitches, per axis."""
    synth_cfg = dataio.SynthConfig(
        seed=seed, count=count, angle_law=dataio.UniformAngles(0.0, 90.0),
        size_range=(24.0, 192.0), aspect_range=(1.0, 4.0), jitter=0.0,
    )
    records, _ = dataio.synth_dataset(synth_cfg)
    err_px = []
    err_cells = []
    for rec in records:
        x0, y0, x1, y1 = rec.quad.bbox()
        roi = Roi(x0, y0, x1 - x0, y1 - y0)
        ex = codec.expand_roi(roi, cfg.expansion_ratio)
        hm = codec.encode(rec.quad, roi, cfg)
        decoded = codec.decode(hm, roi, cfg)
        if decoded is None:
            raise InvalidHeatmapError("round trip lost an instance")
        dq = decoded[0]
        d = np.abs(dq.vertices - rec.quad.vertices)
        err_px.append(d)
        cell = np.array([ex.w / cfg.heatmap_size, ex.h / cfg.heatmap_size])
        err_cells.append(d / cell)
    return np.concatenate(err_px), np.concatenate(err_cells)


def cmd_roundtrip(args) -> int:
    out = _out_dir(args)
    cfg = _osh_config(args)
    err_px, err_cells = _roundtrip_errors(cfg, args.count, args.seed)
    rows = ["axis,mean_px,p99_px,mean_cells,p99_cells"]
    for ax, name in enumerate("xy"):
        rows.append(
            f"{name},{err_px[:, ax].mean():.9g},{np.percentile(err_px[:, ax], 99):.9g},"
            f"{err_cells[:, ax].mean():.9g},{np.percentile(err_cells[:, ax], 99):.9g}"
        )
    (out / "roundtrip.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    for ax, name in enumerate("xy"):
        print(
            f"{name}-axis: mean {err_px[:, ax].mean():.4f} px, "
            f"p99 {np.percentile(err_px[:, ax], 99):.4f} px "
            f"({np.percentile(err_cells[:, ax], 99):.4f} cell pitches)"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# analysis workflows
# ---------------------------------------------------------------------------


def cmd_reorder_stats(args) -> int:
    out = _out_dir(args)
    records = []
    for recs in _gt_by_image(Path(args.gt)).values():
        records.extend(recs)
    hist = reorder.angle_histogram(r.quad for r in records)
    (out / "angle_histogram.csv").write_text(reorder.histogram_to_csv(hist), encoding="utf-8")
    threshold = reorder.select_min_confusion_threshold(hist)
    print(f"instances: {hist.total}")
    print(f"selected threshold: {threshold}")
    return EXIT_OK


def cmd_rcn_offsets(args) -> int:
    out = _out_dir(args)
    a1, a2 = _parse_floats(args.vertex_angles, 2, "--vertex-angles")
    vertex = attn.rcn_pattern_vertex(
        (np.radians(a1), np.radians(a2)), args.arm_len, args.pts_per_arm
    )
    edge = attn.rcn_pattern_edge(np.radians(args.edge_angle), args.arm_len, args.pts_per_arm)
    (out / "rcn_vertex.csv").write_text(vertex.to_csv(), encoding="utf-8")
    (out / "rcn_edge.csv").write_text(edge.to_csv(), encoding="utf-8")
    print(f"vertex pattern: {len(vertex.offsets)} points; edge pattern: {len(edge.offsets)} points")
    return EXIT_OK


def cmd_mff_masks(args) -> int:
    out = _out_dir(args)
    masks = attn.mff_masks(args.threshold_deg)
    (out / "mff_masks.txt").write_text(masks.to_text(), encoding="utf-8")
    print(f"wrote 8 masks -> {out / 'mff_masks.txt'}")
    return EXIT_OK


def cmd_iou(args) -> int:
    from .geom import iou_exact, iou_pixel

    qa = _quad_from_flag(args.quad_a, "--quad-a")
    qb = _quad_from_flag(args.quad_b, "--quad-b")
    exact = iou_exact(qa, qb)
    pixel = iou_pixel(qa, qb, args.resolution)
    print(f"{exact:.6f} / {pixel:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluation workflows
# ---------------------------------------------------------------------------


def _gts_for_eval(path: Path):
    gt_records = _gt_by_image(path)
    all_records = [r for recs in gt_records.values() for r in recs]
    cat_ids = dataio.category_ids(all_records)
    gts = {
        image_id: [
            evalkit.GroundTruth(
                quad=r.quad, class_id=cat_ids[r.category], difficult=r.difficult
            )
            for r in recs
        ]
        for image_id, recs in gt_records.items()
    }
    return gts, cat_ids


def cmd_eval(args) -> int:
    out = _out_dir(args)
    gts, _ = _gts_for_eval(Path(args.gt))
    dets = evalkit.read_detections(args.dets)
    unknown = sorted(set(dets) - set(gts))
    if unknown:
        print(f"warning: detections reference unknown image ids: {', '.join(unknown)}",
              file=sys.stderr)
    result = evalkit.map_over_thresholds(gts, dets, args.iou_thr, method=args.ap_method)
    (out / "eval.csv").write_text(result.to_csv(), encoding="utf-8")
    for thr in args.iou_thr:
        aps = [e.ap for e in result.entries if abs(e.iou_thr - thr) < 1e-9]
        print(f"AP@{thr:.2f}: {float(np.mean(aps)) if aps else 0.0:.6f}")
    print(f"mAP: {result.mean_ap:.6f}")
    return EXIT_OK


def cmd_nms(args) -> int:
    dets = evalkit.read_detections(args.dets)
    kept = {img: evalkit.rotated_nms(d, args.iou_thr) for img, d in dets.items()}
    evalkit.write_detections(args.out, kept)
    before = sum(len(v) for v in dets.values())
    after = sum(len(v) for v in kept.values())
    print(f"kept {after}/{before} detections -> {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    out = _out_dir(args)
    cfg = dataio.SynthConfig(
        seed=args.seed,
        count=args.count,
        angle_law=_angle_law_from_flag(args.angle_law),
        size_range=tuple(_parse_floats(args.size_range, 2, "--size-range")),
        aspect_range=tuple(_parse_floats(args.aspect_range, 2, "--aspect-range")),
        jitter=args.jitter,
        score_law=dataio.ScoreLaw(coeff=args.score_coeff, noise_std=args.score_noise),
    )
    records, detections = dataio.synth_dataset(cfg)
    gt_dir = out / "gt"
    gt_dir.mkdir(exist_ok=True)
    dataio.write_dataset(gt_dir / "synth.txt", records)
    evalkit.write_detections(out / "detections.txt", {"synth": detections})
    print(f"wrote {len(records)} ground truths and {len(detections)} detections -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oskgeom",
        description="Orientation-sensitive keypoint geometry toolkit for rotated boxes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--angle-law", default="uniform:0,90",
                   help="uniform:lo,hi | gapped:lo,hi,glo,ghi | peaked:center,width")
    p.add_argument("--size-range", default="32,256")
    p.add_argument("--aspect-range", default="1,4")
    p.add_argument("--jitter", type=float, default=1.0, help="detection vertex noise std, px")
    p.add_argument("--score-coeff", type=float, default=0.1)
    p.add_argument("--score-noise", type=float, default=0.05)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="encode annotations to heatmap files")
    p.add_argument("--gt", required=True, help="annotation file (internal or DOTA format)")
    p.add_argument("--out", required=True)
    p.add_argument("--roi", default=None, help="fixed ROI x,y,w,h (default: per-quad bbox)")
    p.add_argument("--pgm", action="store_true", help="also write per-channel PGM renders")
    _add_codec_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode heatmap files to detections")
    p.add_argument("--heatmaps", required=True, help="directory written by encode")
    p.add_argument("--out", required=True, help="output detections file")
    p.add_argument("--no-fuse", action="store_true", help="skip midpoint fusion")
    p.add_argument("--fusion-lambda", type=float, default=1.0)
    p.add_argument("--score-floor", type=float, default=0.05)
    _add_codec_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("roundtrip", help="encode+decode accuracy report")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_codec_flags(p)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("reorder-stats", help="angle histogram and threshold selection")
    p.add_argument("--gt", required=True, help="annotation file or directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reorder_stats)

    p = sub.add_parser("rcn-offsets", help="export sampling patterns")
    p.add_argument("--vertex-angles", default="0,90", help="two angles, degrees")
    p.add_argument("--edge-angle", type=float, default=0.0, help="degrees")
    p.add_argument("--arm-len", type=float, default=4.0)
    p.add_argument("--pts-per-arm", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rcn_offsets)

    p = sub.add_parser("mff-masks", help="export the 8 fusion masks")
    p.add_argument("--threshold-deg", type=float, default=44.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mff_masks)

    p = sub.add_parser("iou", help="exact and pixel IoU of two quads")
    p.add_argument("--quad-a", required=True, help="x1,y1,...,x4,y4")
    p.add_argument("--quad-b", required=True, help="x1,y1,...,x4,y4")
    p.add_argument("--resolution", type=int, default=2000)
    p.set_defaults(func=cmd_iou)

    p = sub.add_parser("eval", help="AP evaluation of detections against ground truth")
    p.add_argument("--gt", required=True, help="annotation file or directory")
    p.add_argument("--dets", required=True, help="detections file")
    p.add_argument("--iou-thr", type=float, nargs="+", default=[0.5])
    p.add_argument("--ap-method", choices=["voc07", "allpoints"], default="voc07")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("nms", help="rotated NMS over a detections file")
    p.add_argument("--dets", required=True)
    p.add_argument("--iou-thr", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_nms)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (GeometryError, InvalidHeatmapError, OskgeomError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
