"""Command-line entry points: segment, benchmark, eval, validate."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .archive import read_archive_file
from .errors import AttnMaskError
from .merging import MergeParams
from .metrics import report_table
from .pipeline import (
    RunConfig,
    evaluate_external_masks,
    load_config,
    run_benchmark,
    run_pipeline,
)
from .stack import validate_stack


def _parse_select(value: str) -> tuple[str, float]:
    if value == "none" or value == "top1":
        return value, 0.5
    if value.startswith("ratio:"):
        return "ratio", float(value.split(":", 1)[1])
    raise argparse.ArgumentTypeError(
        f"expected top1, ratio:<value in (0,1]>, or none, got {value!r}"
    )


def _segment_config(args: argparse.Namespace) -> RunConfig:
    policy, ratio = args.select
    merge = MergeParams(grid=args.grid, threshold=args.tau, iterations=args.iters)
    return RunConfig(
        target=args.target,
        merge=merge,
        weight_mode=args.weights,
        out_width=args.out_size,
        out_height=args.out_size,
        selection_policy=policy,
        selection_ratio=ratio,
        prompt=args.prompt,
        timestep=args.timestep,
        extractor_template=args.extractor,
    )


def cmd_segment(args: argparse.Namespace) -> int:
    config = _segment_config(args)
    manifest = run_pipeline(config, args.input, args.out, gt_path=args.gt)
    print(f"run {manifest.run_id[:16]} complete")
    for name, rel in manifest.artifacts.items():
        print(f"  {name}: {Path(args.out) / rel}")
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    evaluation, failures = run_benchmark(
        config, args.dataset, args.out, selection_mode=args.selection
    )
    print(report_table(evaluation))
    if failures:
        print(f"\n{len(failures)} image(s) failed:", file=sys.stderr)
        for failure in failures:
            print(f"  {failure['id']}: {failure['error']}", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    evaluation = evaluate_external_masks(args.pred, args.gt, args.out)
    print(report_table(evaluation))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        stack = read_archive_file(args.archive)
    except AttnMaskError as exc:
        print(f"INVALID: {exc}")
        return 1
    violations = validate_stack(stack, target=args.target)
    census = ", ".join(f"{side}x{side}: {n}" for side, n in sorted(stack.census().items(), reverse=True))
    print(f"layers: {len(stack.self_attention)} ({census})")
    print(f"cross-attention: {'yes' if stack.cross_attention else 'no'}")
    print(f"prompt: {stack.metadata.prompt!r}  timestep: {stack.metadata.timestep}")
    if violations:
        print(f"INVALID: {len(violations)} violation(s)")
        for v in violations:
            print(f"  [{v.code}] {v.message}")
        return 1
    print("VALID")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attnmask",
        description="Zero-shot segmentation from diffusion self-attention archives.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one image or .atnp archive")
    seg.add_argument("--input", required=True, help="raster image or .atnp archive")
    seg.add_argument("--prompt", default="", help="text prompt (empty = unconditioned)")
    seg.add_argument("--timestep", type=int, default=300)
    seg.add_argument("--grid", type=int, default=16, help="anchor grid M (M x M anchors)")
    seg.add_argument("--tau", type=float, default=1.0, help="symmetric-KL merge threshold")
    seg.add_argument("--iters", type=int, default=3, help="total merging iterations")
    seg.add_argument("--weights", choices=("proportional", "uniform"), default="proportional")
    seg.add_argument(
        "--select", type=_parse_select, default=("none", 0.5), help="top1 | ratio:<value> | none"
    )
    seg.add_argument("--target", type=int, default=64, help="working latent resolution")
    seg.add_argument("--out-size", type=int, default=512, help="output mask side length")
    seg.add_argument("--gt", default=None, help="optional ground-truth mask PNG")
    seg.add_argument("--extractor", default=None, help="extractor command template")
    seg.add_argument("--out", required=True, help="run output directory")
    seg.set_defaults(func=cmd_segment)

    bench = sub.add_parser("benchmark", help="run and evaluate a whole dataset")
    bench.add_argument("--dataset", required=True, help="root with images/ and masks/")
    bench.add_argument("--config", required=True, help="JSON run config")
    bench.add_argument("--selection", choices=("guided", "oracle"), default="oracle")
    bench.add_argument("--out", required=True)
    bench.set_defaults(func=cmd_benchmark)

    ev = sub.add_parser("eval", help="score externally produced masks against ground truth")
    ev.add_argument("--pred", required=True, help="directory of predicted mask PNGs")
    ev.add_argument("--gt", required=True, help="directory of ground-truth mask PNGs")
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_eval)

    val = sub.add_parser("validate", help="check an .atnp archive")
    val.add_argument("--archive", required=True)
    val.add_argument("--target", type=int, default=None, help="also check resolutions divide this")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AttnMaskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
