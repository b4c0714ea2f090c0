"""Command-line interface.

Subcommands compose into reproducible pipelines: everything randomized takes
`--seed`, outputs are JSON/CSV/BFK1/PNG files, and reruns with identical
flags produce byte-identical results. Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .blurspace import EClass, PClass
from .convolve import convolve_reflect, sparsify_kernel
from .corpus import generate_corpus, read_kernel
from .evalmap import (
    COCO_THRESHOLDS,
    EvalConfig,
    Regime,
    evaluate_map,
    report_to_json,
    sweep_grid,
    sweep_rows_to_csv,
)
from .imageio import load_image, save_image
from .kernels import Extents, generate_kernel
from .labels import (
    BoundingBox,
    DatasetError,
    expand_box,
    load_annotations,
    save_annotations,
    transform_annotations,
)
from .pipeline import MixPolicy, build_plan, execute_plan, manifest_extents
from .seeding import derive_seed
from .squint import kernel_spreads, squint_factors


def _add_seed(parser: argparse.ArgumentParser, default: int = 0) -> None:
    parser.add_argument("--seed", type=int, default=default, help="master seed (default %(default)s)")


def _add_jobs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--jobs", type=int, default=1, help="worker count; results do not depend on it")


def _kernel_from_args(args) -> "BlurKernel":
    if args.kernel:
        return read_kernel(args.kernel)
    if args.p is None or args.e is None:
        raise SystemExit("either --kernel or both --p and --e are required")
    return generate_kernel(
        PClass.from_number(args.p),
        EClass.from_number(args.e),
        args.seed,
        stationary=args.stationary,
    )


def cmd_gen_kernels(args) -> int:
    if args.p is not None or args.e is not None:
        if args.p is None or args.e is None:
            raise SystemExit("--p and --e must be given together")
        pairs = ((PClass.from_number(args.p), EClass.from_number(args.e)),)
    else:
        from .blurspace import ALL_PAIRS

        pairs = ALL_PAIRS
    manifest = generate_corpus(
        args.count,
        args.seed,
        Path(args.out),
        pairs=pairs,
        jobs=args.jobs,
        defocus_sigma=args.defocus_sigma,
        stationary=args.stationary,
    )
    n = len(manifest["kernels"])
    print(f"wrote {n} kernels to {args.out}")
    if args.montage:
        from .report import save_kernel_montage

        kernels = [read_kernel(Path(args.out) / entry["file"]) for entry in manifest["kernels"][:30]]
        save_kernel_montage(kernels, args.montage)
        print(f"wrote montage to {args.montage}")
    return 0 if manifest["complete"] else 1


def cmd_blur_image(args) -> int:
    kernel = _kernel_from_args(args)
    image = load_image(args.image)
    blurred = convolve_reflect(image, sparsify_kernel(kernel), jobs=args.jobs)
    save_image(args.out, blurred)
    print(f"wrote {args.out}")
    return 0


def _policy_from_args(args) -> MixPolicy:
    if args.policy == "generalist":
        return MixPolicy.generalist()
    if args.policy == "low-exposure":
        return MixPolicy.low_exposure()
    if args.specialist_p is None:
        raise SystemExit("--specialist-p is required with --policy specialist")
    return MixPolicy.specialist(PClass.from_number(args.specialist_p), not args.all_exposures)


def cmd_blur_dataset(args) -> int:
    ds = load_annotations(args.annotations)
    policy = _policy_from_args(args)
    plan = build_plan(ds, policy, args.seed)
    manifest = execute_plan(
        plan,
        args.images,
        args.out,
        jobs=args.jobs,
        defocus_sigma=args.defocus_sigma,
    )
    n_sharp = sum(1 for e in manifest["entries"] if e["blur_class"] == "sharp")
    print(f"blurred dataset written to {args.out}: {n_sharp} sharp, {len(manifest['entries']) - n_sharp} blurred")
    if args.expanded_out:
        expanded = transform_annotations(ds, manifest_extents(manifest), clip=args.clip)
        save_annotations(expanded, args.expanded_out)
        print(f"wrote expanded annotations to {args.expanded_out}")
    return 0 if manifest["complete"] else 1


def _parse_extents(text: str) -> Extents:
    parts = [int(v) for v in text.split(",")]
    if len(parts) != 4:
        raise SystemExit("--extents needs four comma-separated integers: x-,x+,y-,y+")
    return Extents.from_list(parts)


def cmd_expand_labels(args) -> int:
    if args.boxes:
        if not args.extents:
            raise SystemExit("--extents is required with --boxes")
        ext = _parse_extents(args.extents)
        boxes = json.loads(Path(args.boxes).read_text())
        expanded = [expand_box(BoundingBox(*b), ext).as_list() for b in boxes]
        Path(args.out).write_text(json.dumps(expanded, indent=2) + "\n")
        print(f"wrote {len(expanded)} expanded boxes to {args.out}")
        return 0
    if not args.annotations or not args.manifest:
        raise SystemExit("either --boxes/--extents or --annotations/--manifest are required")
    ds = load_annotations(args.annotations)
    manifest = json.loads(Path(args.manifest).read_text())
    expanded = transform_annotations(ds, manifest_extents(manifest), clip=args.clip)
    save_annotations(expanded, args.out)
    print(f"wrote expanded annotations to {args.out}")
    return 0


def _parse_thresholds(text: str) -> tuple[float, ...]:
    if text == "coco":
        return COCO_THRESHOLDS
    return tuple(sorted(float(v) for v in text.split(",")))


def cmd_evaluate(args) -> int:
    ds = load_annotations(args.gt)
    regime = Regime(args.regime)
    if regime is Regime.EXPANDED:
        if not args.manifest:
            raise SystemExit("--manifest is required with --regime expanded")
        manifest = json.loads(Path(args.manifest).read_text())
        ds = transform_annotations(ds, manifest_extents(manifest), clip=args.clip)
    config = EvalConfig(
        iou_thresholds=_parse_thresholds(args.iou),
        regime=regime,
        score_threshold=args.score_threshold,
    )
    report = evaluate_map(args.pred, ds, config)
    for thr, value in report.map_at.items():
        print(f"mAP@{thr:.2f} = {value:.4f}")
    if len(report.map_at) > 1:
        print(f"mAP@[{args.iou}] = {report.map_mean:.4f}")
    if args.out:
        Path(args.out).write_text(report_to_json(report))
    if args.csv:
        import csv as _csv

        with open(args.csv, "w", newline="") as fh:
            _csv.writer(fh, lineterminator="\n").writerows(report.csv_rows())
    if args.plot:
        from .report import save_eval_figure

        save_eval_figure(report, args.plot)
    return 0


def cmd_sweep(args) -> int:
    ds = load_annotations(args.gt)
    p_values = [float(v) for v in args.p_values.split(",")]
    e_values = [float(v) for v in args.e_values.split(",")]
    image_ids = sorted(im.id for im in ds.images)

    def eval_cell(p: float, e: float) -> tuple[float, int]:
        cell = p_values.index(p) * len(e_values) + e_values.index(e)
        extents = {}
        for image_id in image_ids:
            kernel = generate_kernel(p, e, derive_seed(args.seed, cell, image_id))
            extents[image_id] = kernel.meta.extents
        expanded = transform_annotations(ds, extents, clip=args.clip)
        report = evaluate_map(args.pred, expanded, EvalConfig(iou_thresholds=(0.5,)))
        return report.map_at[0.5], len(image_ids)

    rows = sweep_grid(eval_cell, p_values, e_values)
    csv_text = sweep_rows_to_csv(rows)
    Path(args.out).write_text(csv_text)
    print(f"wrote {len(rows)} sweep cells to {args.out}")
    if args.plot:
        from .report import save_sweep_figure

        save_sweep_figure(rows, args.plot)
        print(f"wrote sweep figure to {args.plot}")
    return 0


def cmd_merge_stats(args) -> int:
    from .adapt import ChannelStats, merge_batch_stats

    source = json.loads(Path(args.source).read_text())
    target = json.loads(Path(args.target).read_text())
    merged = merge_batch_stats(
        ChannelStats(source["mu"], source["var"]),
        ChannelStats(target["mu"], target["var"]),
        n_source=args.source_count,
        n_target=args.target_count,
    )
    payload = json.dumps({"mu": merged.mu.tolist(), "var": merged.var.tolist()}, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    return 0


def cmd_squint_factors(args) -> int:
    kernel = _kernel_from_args(args)
    spreads = kernel_spreads(kernel)
    fx, fy = squint_factors(spreads)
    payload = {
        "s_x": spreads.s_x,
        "s_y": spreads.s_y,
        "theta": spreads.theta,
        "sigma_major": spreads.sigma_major,
        "sigma_minor": spreads.sigma_minor,
        "f_x": fx,
        "f_y": fy,
    }
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"f_x = {fx:.4f}, f_y = {fy:.4f} (s_x = {spreads.s_x:.3f}, s_y = {spreads.s_y:.3f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blurlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"blurlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-kernels", help="generate seeded blur kernels (BFK1 + manifest)")
    p.add_argument("--p", type=int, help="1-based shake class; omit with --e omitted for all pairs")
    p.add_argument("--e", type=int, help="1-based exposure class")
    p.add_argument("--count", type=int, required=True, help="kernels per (P, E) pair")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--defocus-sigma", type=float, default=0.0, help="compound with Gaussian defocus")
    p.add_argument("--stationary", action="store_true", help="emit delta kernels (no motion)")
    p.add_argument("--montage", help="also render a kernel montage figure to this path")
    _add_seed(p)
    _add_jobs(p)
    p.set_defaults(func=cmd_gen_kernels)

    p = sub.add_parser("blur-image", help="convolve one image with a kernel")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kernel", help="BFK1 kernel file (else --p/--e/--seed generate one)")
    p.add_argument("--p", type=int)
    p.add_argument("--e", type=int)
    p.add_argument("--stationary", action="store_true")
    _add_seed(p)
    _add_jobs(p)
    p.set_defaults(func=cmd_blur_image)

    p = sub.add_parser("blur-dataset", help="blur a detection dataset under a mixing policy")
    p.add_argument("--annotations", required=True, help="COCO-subset ground-truth JSON")
    p.add_argument("--images", required=True, help="source image directory")
    p.add_argument("--out", required=True, help="output directory (images, kernels/, manifest.json)")
    p.add_argument("--policy", choices=["generalist", "low-exposure", "specialist"], default="generalist")
    p.add_argument("--specialist-p", type=int, help="1-based shake class for --policy specialist")
    p.add_argument("--all-exposures", action="store_true", help="specialist covers all exposures, 10%% sharp")
    p.add_argument("--defocus-sigma", type=float, default=0.0)
    p.add_argument("--expanded-out", help="also write expanded annotations here")
    p.add_argument("--clip", action="store_true", help="clip expanded boxes to image bounds")
    _add_seed(p)
    _add_jobs(p)
    p.set_defaults(func=cmd_blur_dataset)

    p = sub.add_parser("expand-labels", help="expand boxes by kernel extents")
    p.add_argument("--annotations", help="COCO-subset JSON to transform")
    p.add_argument("--manifest", help="blur manifest supplying per-image extents")
    p.add_argument("--boxes", help="raw JSON list of [x,y,w,h] boxes (with --extents)")
    p.add_argument("--extents", help="x-,x+,y-,y+ applied to every raw box")
    p.add_argument("--out", required=True)
    p.add_argument("--clip", action="store_true")
    p.set_defaults(func=cmd_expand_labels)

    p = sub.add_parser("evaluate", help="COCO-style mAP of predictions against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--iou", default="0.5", help='comma list of thresholds, or "coco" for 0.5:0.95')
    p.add_argument("--regime", choices=[r.value for r in Regime], default="standard")
    p.add_argument("--manifest", help="blur manifest (required for --regime expanded)")
    p.add_argument("--clip", action="store_true")
    p.add_argument("--score-threshold", type=float, default=0.0)
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--csv", help="write per-class AP rows here")
    p.add_argument("--plot", help="write a per-class AP figure here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="mAP over a grid of continuous (P, E) values")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--p-values", required=True, help="comma list of shake intensities")
    p.add_argument("--e-values", required=True, help="comma list of exposure fractions")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--clip", action="store_true")
    p.add_argument("--plot", help="write the sweep figure here")
    _add_seed(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("merge-stats", help="blend source/target normalization statistics")
    p.add_argument("--source", required=True, help='JSON {"mu": [...], "var": [...]}')
    p.add_argument("--target", required=True)
    p.add_argument("--source-count", type=float, default=16.0, help="effective source sample count")
    p.add_argument("--target-count", type=float, default=1.0, help="minibatch sample count")
    p.add_argument("--out")
    p.set_defaults(func=cmd_merge_stats)

    p = sub.add_parser("squint-factors", help="per-axis undersampling factors for a kernel")
    p.add_argument("--kernel", help="BFK1 kernel file (else --p/--e/--seed generate one)")
    p.add_argument("--p", type=int)
    p.add_argument("--e", type=int)
    p.add_argument("--stationary", action="store_true")
    p.add_argument("--json", action="store_true", help="emit machine-readable JSON")
    _add_seed(p)
    p.set_defaults(func=cmd_squint_factors)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(f"error: {exc.code}", file=sys.stderr)
            return 2
        return int(exc.code or 0)
    except (DatasetError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())
