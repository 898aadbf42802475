"""Command-line interface wiring the toolkit into runnable pipelines.

Exit codes: 0 success, 1 usage error, 2 data error, 3 check failure.
Global flags (before the subcommand): --threads N and --config PATH, where
the config file holds `key = value` defaults that explicit flags override.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .decode import (
    ContourCandidates,
    DecodeConfig,
    adaptive_alpha,
    cluster_points,
    detection_from_candidates,
    rescore,
)
from .demo import run_demo
from .errors import ContourKitError
from .evaluation import (
    area_tertiles,
    bucketed_prf,
    match_detections,
    metrics_report,
)
from .formats import (
    DATASET_FORMATS,
    atomic_write,
    parse_annotations,
    parse_candidates,
    parse_detections,
    read_heatmap,
    serialize_annotations,
    serialize_candidates,
    serialize_detections,
    write_heatmap,
)
from .gradsuite import TOLERANCE, run_all
from .labels import AnnotationRecord, build_training_sample


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="contourkit",
        description="Contour-point text detection toolkit: labels, decoding, metrics.",
    )
    parser.add_argument("--threads", type=int, default=1, help="worker threads where applicable")
    parser.add_argument("--config", default=None, help="key=value defaults file; CLI flags override")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("labelgen", help="contour-band labels + GT boxes from annotations")
    p.add_argument("--format", required=True, choices=DATASET_FORMATS)
    p.add_argument("--input", required=True, help="one image's annotation file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--height", required=True, type=int)
    p.add_argument("--width", required=True, type=int)
    p.add_argument("--band", type=float, default=2.0)
    p.add_argument("--ctw-relative", action="store_true",
                   help="ctw1500 lines carry a box plus 28 relative offsets")
    p.set_defaults(func=cmd_labelgen)

    p = sub.add_parser("rescore", help="contour point candidates from a heatmap pair")
    p.add_argument("--hmap", required=True)
    p.add_argument("--vmap", required=True)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--nms-window", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rescore)

    p = sub.add_parser("reconstruct", help="detection polygons from candidate points")
    p.add_argument("--candidates", required=True)
    p.add_argument("--alpha-scale", type=float, default=1.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("eval", help="precision/recall/F of detections vs ground truth")
    p.add_argument("--dets", required=True, help="detections JSONL (polygon, score)")
    p.add_argument("--gts", required=True, help="ground truth, canonical JSONL")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--buckets", default=None,
                   help="'auto' for GT-area tertiles or comma-separated boundaries")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("demo", help="synthetic end-to-end pipeline: train, decode, evaluate")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--single-direction", action="store_true",
                   help="ablation: decode from the horizontal map alone")
    p.add_argument("--no-rescoring", action="store_true",
                   help="ablation: threshold raw maps without NMS thinning")
    p.set_defaults(func=cmd_demo)
    return parser


def cmd_labelgen(args) -> int:
    data = Path(args.input).read_bytes()
    records = parse_annotations(data, args.format, ctw_relative=args.ctw_relative)
    label, boxes, _ = build_training_sample(records, args.height, args.width, args.band)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    write_heatmap(out / f"{stem}.cthm", label.astype(np.float64))
    sidecar = [
        AnnotationRecord(
            np.array([[b[0], b[1]], [b[2], b[1]], [b[2], b[3]], [b[0], b[3]]]),
            ignore=False,
        )
        for b in boxes
    ]
    sidecar += [r for r in records if r.ignore]
    atomic_write(out / f"{stem}.boxes.jsonl", serialize_annotations(sidecar))
    print(f"{stem}: {len(records)} records -> {int(label.sum())} contour pixels, "
          f"{len(boxes)} boxes, {sum(r.ignore for r in records)} ignored")
    return 0


def cmd_rescore(args) -> int:
    hmap = read_heatmap(args.hmap)
    vmap = read_heatmap(args.vmap)
    cfg = DecodeConfig(theta=args.theta, nms_window=args.nms_window)
    cands = rescore(hmap, vmap, cfg)
    atomic_write(args.out, serialize_candidates(cands))
    print(f"{len(cands)} candidates -> {args.out}")
    return 0


def cmd_reconstruct(args) -> int:
    points = parse_candidates(Path(args.candidates).read_bytes())
    cfg = DecodeConfig(alpha_scale=args.alpha_scale)
    dets = []
    if len(points) >= cfg.min_candidates:
        xy = np.column_stack([points[:, 1] + 0.5, points[:, 0] + 0.5])
        link = adaptive_alpha(xy, max(cfg.alpha_scale, 2.0))
        for group in cluster_points(xy, link):
            det = detection_from_candidates(
                ContourCandidates(points[group], (0, 0)), cfg
            )
            if det is not None:
                dets.append(det)
    atomic_write(args.out, serialize_detections(dets))
    print(f"{len(dets)} polygons -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    dets = parse_detections(Path(args.dets).read_bytes())
    gts = parse_annotations(Path(args.gts).read_bytes(), "canonical_jsonl")
    match = match_detections(dets, gts, iou_thresh=args.iou)
    buckets = None
    if args.buckets:
        bounds = area_tertiles(gts) if args.buckets == "auto" else [
            float(b) for b in args.buckets.split(",")
        ]
        if bounds:
            buckets = bucketed_prf(dets, gts, bounds, iou_thresh=args.iou)
    report = metrics_report(match, buckets, iou_thresh=args.iou)
    atomic_write(args.out, report)
    print(report, end="")
    return 0


def cmd_gradcheck(args) -> int:
    failed = False
    for name, reports in run_all(args.seed):
        worst = max(r.max_rel_error for r in reports)
        ok = worst < TOLERANCE
        failed |= not ok
        print(
            f"{name:>14}  instances={len(reports):3d}  max_rel_err={worst:.3e}  "
            f"step={reports[0].step:g}  {'PASS' if ok else 'FAIL'}"
        )
    return 3 if failed else 0


def cmd_demo(args) -> int:
    result = run_demo(
        args.seed,
        out_dir=args.out,
        single_direction=args.single_direction,
        skip_rescoring=args.no_rescoring,
        threads=args.threads,
    )
    first, last = result.loss_curve[0], result.loss_curve[-1]
    print(f"training loss: {first:.4f} -> {last:.4f} "
          f"({(1 - last / first) * 100.0:.1f}% reduction)")
    print(f"held-out: tp={result.match.tp} fp={result.match.fp} fn={result.match.fn}")
    print(f"recall={result.recall:.4f} precision={result.precision:.4f} "
          f"f_measure={result.f_measure:.4f}")
    print(f"outputs in {args.out}")
    return 0


def _peek_config(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _collect_actions(parser):
    actions = {}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                actions.update(_collect_actions(sub))
        elif action.dest != "help":
            actions[action.dest] = action
    return actions


def _load_config(path, parser):
    actions = _collect_actions(parser)
    defaults = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            parser.error(f"config line {lineno}: expected key = value")
        key = key.strip().lower().replace("-", "_")
        value = value.strip()
        if key not in actions:
            parser.error(f"config line {lineno}: unknown option {key!r}")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except ValueError as exc:
                parser.error(f"config line {lineno}: bad value for {key}: {exc}")
        else:
            defaults[key] = value
    return defaults


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    cfg_path = _peek_config(argv)
    try:
        if cfg_path:
            parser.set_defaults(**_load_config(cfg_path, parser))
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args) or 0
    except (ContourKitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
