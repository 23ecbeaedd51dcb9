"""Command-line contract consumed by the segmentation pipeline.

    attn-extractor extract --image IMG --prompt TEXT --timestep N --out PATH
                           [--noise] [--seed N] [--model ID] [--heads mean|sum]

Exit code 0 on success with the archive at PATH; diagnostics go to stderr.
``--model synthetic`` selects the offline deterministic backbone; anything
else is treated as a diffusers checkpoint id for the stable-diffusion backend.
"""
from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

from .atnp import write_archive
from .capture import CaptureResult
from .request import DEFAULT_MODEL, DEFAULT_TIMESTEP, ExtractionRequest


def extract(request: ExtractionRequest) -> Path:
    if not request.image.exists():
        raise FileNotFoundError(f"image not found: {request.image}")
    if request.model == "synthetic":
        from .synthetic_model import SyntheticBackbone

        result = SyntheticBackbone(seed=request.seed).run(request)
    else:
        from . import sd_backend

        result = sd_backend.run(request)
    _write(result, request)
    return request.out


def _write(result: CaptureResult, request: ExtractionRequest) -> None:
    # name + content digest, not the absolute path: identical image bytes must
    # yield identical archives wherever the file happens to live
    digest = hashlib.sha256(request.image.read_bytes()).hexdigest()[:16]
    write_archive(
        request.out,
        result.self_tensors,
        result.cross_tensors,
        {
            "model_id": result.model_id,
            "timestep": request.timestep,
            "prompt": request.prompt,
            "tokens": list(result.tokens),
            "image_source": f"{request.image.name}@sha256:{digest}",
            "latent_size": result.latent_size,
        },
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attn-extractor")
    sub = parser.add_subparsers(dest="command", required=True)
    ex = sub.add_parser("extract", help="capture attention tensors into an archive")
    ex.add_argument("--image", required=True)
    ex.add_argument("--prompt", default="", help="empty = unconditioned embedding")
    ex.add_argument("--timestep", type=int, default=DEFAULT_TIMESTEP)
    ex.add_argument("--out", required=True)
    ex.add_argument("--noise", action="store_true",
                    help="add forward-process noise at the timestep (seeded)")
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--model", default=DEFAULT_MODEL,
                    help=f"checkpoint id or 'synthetic' (default {DEFAULT_MODEL})")
    ex.add_argument("--heads", choices=("mean", "sum"), default="mean")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        request = ExtractionRequest(
            image=Path(args.image),
            out=Path(args.out),
            prompt=args.prompt,
            timestep=args.timestep,
            model=args.model,
            add_noise=args.noise,
            seed=args.seed,
            head_mode=args.heads,
        )
        out = extract(request)
    except Exception as exc:
        print(f"extract failed: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
