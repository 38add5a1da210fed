"""Command-line front end for the detection post-processing pipeline.

Subcommands mirror the pipeline stages: evaluate (mAP of a submission
against ground truth), nms (suppress a submission), sweep (mAP grid over
NMS thresholds), fuse (multi-source fusion to a new submission), augment
(one image + boxes through a preset) and bench (timing on synthetic data).

All subcommands are deterministic given their flags, input files and seed.
The only environment variable honoured is PNEUMOBOX_THREADS, which sizes
the sweep worker pool.
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as formats
from .augment import PRESET_NAMES, augment_sample, preset
from .fusion import ShrinkConfig, ensemble
from .geometry import Box
from .metric import (
    ApConfig,
    COMPARATORS,
    Detection,
    EMPTY_IMAGE_POLICIES,
    ImageRecord,
    average_precision,
    mean_average_precision,
)
from .nms import nms, sweep, threshold_range

__all__ = ["main"]


def _read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _parse_precision(value: str) -> int | None:
    if value == "full":
        return None
    try:
        precision = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"precision must be an integer or 'full', got {value!r}")
    if precision < 0:
        raise argparse.ArgumentTypeError("precision must be non-negative")
    return precision


def _load_run_config(args) -> formats.RunConfig:
    if getattr(args, "config", None):
        return formats.load_config(_read_text(args.config))
    return formats.RunConfig()


def _ap_config(args, run_config: formats.RunConfig) -> ApConfig:
    base = run_config.ap
    thresholds = base.thresholds
    if args.thresholds:
        thresholds = tuple(float(t) for t in args.thresholds.split(","))
    return ApConfig(
        thresholds,
        args.comparator or base.comparator,
        args.empty_policy or base.empty_image_policy,
    )


def _add_ap_flags(parser):
    parser.add_argument("--thresholds", help="comma-separated IoU threshold ladder")
    parser.add_argument("--comparator", choices=COMPARATORS, help="hit comparator against the threshold")
    parser.add_argument("--empty-policy", choices=EMPTY_IMAGE_POLICIES, dest="empty_policy",
                        help="how images with no truth and no predictions score")
    parser.add_argument("--config", help="JSON config file with ap/shrink/augment sections")


def _cmd_evaluate(args) -> int:
    run_config = _load_run_config(args)
    cfg = _ap_config(args, run_config)
    records = formats.parse_ground_truth(_read_text(args.truth))
    rows = formats.parse_predictions(_read_text(args.pred))
    known = {r.image_id for r in records}
    extra = [row.patient_id for row in rows if row.patient_id not in known]
    if extra:
        print(
            f"warning: {len(extra)} patient(s) only in predictions; scored with empty truth",
            file=sys.stderr,
        )
    merged = formats.merge_predictions(records, rows)
    score = mean_average_precision(merged, cfg)
    if args.per_image:
        lines = ["image_id,ap"]
        for record in merged:
            ap = average_precision(record, cfg)
            lines.append(f"{record.image_id},{'' if ap is None else f'{ap:.6f}'}")
        Path(args.per_image).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.json:
        print(json.dumps({"map": score}))
    else:
        print(f"{score:.6f}")
    return 0


def _cmd_nms(args) -> int:
    rows = formats.parse_predictions(_read_text(args.pred))
    out_rows = []
    for row in rows:
        kept = nms(formats.to_detections(row), args.iou_threshold)
        out_rows.append(formats.from_detections(row.patient_id, kept))
    Path(args.output).write_text(
        formats.serialize_predictions(out_rows, args.precision), encoding="utf-8"
    )
    return 0


def _cmd_sweep(args) -> int:
    run_config = _load_run_config(args)
    cfg = _ap_config(args, run_config)
    records = formats.parse_ground_truth(_read_text(args.truth))
    runs = []
    for path in args.pred:
        rows = formats.parse_predictions(_read_text(path))
        runs.append((path, formats.merge_predictions(records, rows)))
    thresholds = threshold_range(args.nms_min, args.nms_max, args.nms_step)
    if not thresholds:
        raise ValueError(
            f"empty sweep grid: no thresholds in [{args.nms_min}, {args.nms_max}] "
            f"with step {args.nms_step}"
        )
    workers = int(os.environ.get("PNEUMOBOX_THREADS", "1") or "1")
    result = sweep(runs, thresholds, cfg, max_workers=workers)
    sys.stdout.write(formats.serialize_sweep(result))
    best = result.best
    print(f"# best: run={best.run_label} nms_threshold={best.nms_threshold!r} map={best.mean_ap:.6f}")
    return 0


def _shrink_config(args, run_config: formats.RunConfig) -> ShrinkConfig:
    base = run_config.shrink
    mode = base.mode
    if args.mode:
        mode = "fixed-rescale" if args.mode == "rescale" else args.mode
    return ShrinkConfig(
        low_percentile=args.low_percentile if args.low_percentile is not None else base.low_percentile,
        high_percentile=args.high_percentile if args.high_percentile is not None else base.high_percentile,
        scale=args.scale if args.scale is not None else base.scale,
        mode=mode,
        rescale_factor=args.rescale_factor if args.rescale_factor is not None else base.rescale_factor,
        min_size=base.min_size,
    )


def _cmd_fuse(args) -> int:
    run_config = _load_run_config(args)
    shrink = _shrink_config(args, run_config)
    sources = [formats.parse_predictions(_read_text(path)) for path in args.pred]
    patient_order: list[str] = []
    seen: set[str] = set()
    for rows in sources:
        for row in rows:
            if row.patient_id not in seen:
                seen.add(row.patient_id)
                patient_order.append(row.patient_id)
    id_sets = [{row.patient_id for row in rows} for rows in sources]
    if any(ids != seen for ids in id_sets):
        print("warning: patient sets differ across inputs; using their union", file=sys.stderr)
    by_source = [{row.patient_id: row for row in rows} for rows in sources]
    out_rows = []
    for pid in patient_order:
        dets_by_source = [
            formats.to_detections(rows[pid], source_id=i) if pid in rows else []
            for i, rows in enumerate(by_source)
        ]
        fused = ensemble(dets_by_source, args.cluster_iou, shrink, args.nms)
        out_rows.append(formats.from_detections(pid, fused))
    Path(args.output).write_text(
        formats.serialize_predictions(out_rows, args.precision), encoding="utf-8"
    )
    return 0


def _cmd_augment(args) -> int:
    chosen = preset(args.preset)
    image = formats.read_pgm(args.image)
    boxes = formats.parse_boxes_csv(_read_text(args.boxes))
    out_image, out_boxes = augment_sample(image, boxes, chosen, args.seed)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    image_path = out_dir / f"{stem}_aug.pgm"
    boxes_path = out_dir / f"{stem}_aug_boxes.csv"
    formats.write_pgm(image_path, out_image)
    boxes_path.write_text(formats.serialize_boxes_csv(out_boxes), encoding="utf-8")
    print(image_path)
    print(boxes_path)
    return 0


def _synthetic_dataset(n_images: int, boxes_per_image: int, rng, n_sources: int = 4):
    records = []
    sources_per_image = []
    for i in range(n_images):
        truth = []
        for _ in range(boxes_per_image):
            x, y = rng.uniform(0, 900, size=2)
            w, h = rng.uniform(20, 120, size=2)
            truth.append(Box(x, y, w, h))
        sources = []
        for s in range(n_sources):
            dets = []
            for b in truth:
                dx, dy = rng.uniform(-10, 10, size=2)
                dets.append(Detection(Box(b.x + dx, b.y + dy, b.w, b.h), rng.uniform(0.1, 1.0), s))
            sources.append(dets)
        sources_per_image.append(sources)
        records.append(ImageRecord(f"img{i:05d}", tuple(truth), tuple(sources[0])))
    return records, sources_per_image


def _cmd_bench(args) -> int:
    if args.images <= 0 or args.boxes_per_image <= 0:
        raise ValueError("--images and --boxes-per-image must be positive")
    rng = np.random.Generator(np.random.PCG64(args.seed))
    records, sources_per_image = _synthetic_dataset(args.images, args.boxes_per_image, rng)

    start = time.perf_counter()
    mean_average_precision(records)
    metric_s = time.perf_counter() - start

    start = time.perf_counter()
    for record in records:
        nms(record.predictions, 0.5)
    nms_s = time.perf_counter() - start

    start = time.perf_counter()
    for sources in sources_per_image:
        ensemble(sources)
    fusion_s = time.perf_counter() - start

    print("operation,images,boxes_per_image,seconds")
    for name, seconds in (("metric", metric_s), ("nms", nms_s), ("fusion", fusion_s)):
        print(f"{name},{args.images},{args.boxes_per_image},{seconds:.6f}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pneumobox",
        description="Detection post-processing: mAP scoring, NMS sweeps, fusion and augmentation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score a submission against ground truth")
    p.add_argument("--truth", required=True, help="ground-truth CSV")
    p.add_argument("--pred", required=True, help="submission CSV")
    _add_ap_flags(p)
    p.add_argument("--per-image", dest="per_image", help="also write a per-image AP CSV here")
    p.add_argument("--json", action="store_true", help="emit full-precision JSON instead of 6 decimals")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("nms", help="apply NMS to a submission")
    p.add_argument("--pred", required=True, help="submission CSV")
    p.add_argument("--iou-threshold", dest="iou_threshold", type=float, default=0.5)
    p.add_argument("-o", "--output", required=True, help="output submission CSV")
    p.add_argument("--precision", type=_parse_precision, default=4,
                   help="decimal places for output values, or 'full'")
    p.set_defaults(func=_cmd_nms)

    p = sub.add_parser("sweep", help="mAP grid over NMS thresholds, one row per (run, threshold)")
    p.add_argument("--truth", required=True, help="ground-truth CSV")
    p.add_argument("--pred", required=True, nargs="+", help="one submission CSV per run")
    p.add_argument("--nms-min", dest="nms_min", type=float, default=0.1)
    p.add_argument("--nms-max", dest="nms_max", type=float, default=1.0)
    p.add_argument("--nms-step", dest="nms_step", type=float, default=0.05)
    _add_ap_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("fuse", help="fuse multiple submissions into one")
    p.add_argument("--pred", required=True, nargs="+", help="one submission CSV per source")
    p.add_argument("--cluster-iou", dest="cluster_iou", type=float, default=0.5)
    p.add_argument("--mode", choices=("percentile", "rescale"), help="shrink rule for fused sizes")
    p.add_argument("--scale", type=float, help="interpercentile reduction divisor")
    p.add_argument("--low-percentile", dest="low_percentile", type=float)
    p.add_argument("--high-percentile", dest="high_percentile", type=float)
    p.add_argument("--rescale-factor", dest="rescale_factor", type=float)
    p.add_argument("--nms", type=float, default=0.5, help="NMS threshold applied after fusion")
    p.add_argument("-o", "--output", required=True, help="output submission CSV")
    p.add_argument("--precision", type=_parse_precision, default=4,
                   help="decimal places for output values, or 'full'")
    p.add_argument("--config", help="JSON config file with ap/shrink/augment sections")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("augment", help="augment one PGM image and its boxes")
    p.add_argument("--image", required=True, help="input 8-bit PGM")
    p.add_argument("--boxes", required=True, help="input boxes CSV (header x,y,w,h)")
    p.add_argument("--preset", required=True, choices=PRESET_NAMES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("bench", help="time metric, NMS and fusion on synthetic data")
    p.add_argument("--images", type=int, required=True)
    p.add_argument("--boxes-per-image", dest="boxes_per_image", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
