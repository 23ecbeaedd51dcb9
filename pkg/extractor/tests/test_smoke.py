"""End-to-end smoke: photograph -> archive -> engine -> regions.

The offline variant runs the synthetic backbone; the checkpoint variant needs
diffusers plus downloaded weights and is skipped wherever those are absent.
"""
from __future__ import annotations

import sys

import pytest

from attnmask.archive import read_archive_file
from attnmask.merging import MergeParams
from attnmask.pipeline import RunConfig, run_pipeline
from attnmask.stack import validate_stack


def _engine_config() -> RunConfig:
    # the synthetic backbone's fused maps sit in a tighter KL range than real
    # captures (within-object < 0.001, across ~0.1), so tau goes in that gap
    return RunConfig(
        target=64,
        merge=MergeParams(grid=8, threshold=0.04, iterations=3),
        out_width=128,
        out_height=128,
    )


def _template() -> str:
    return (
        f"{sys.executable} -m attn_extractor.cli extract --model synthetic "
        "--image {image} --prompt {prompt} --timestep {timestep} --out {out}"
    )


def test_smoke_unconditioned_capture_segments(tmp_path, wound_photo, monkeypatch):
    monkeypatch.setenv("ATTNMASK_EXTRACTOR", _template())
    config = _engine_config()
    out_a = tmp_path / "run_a"
    manifest = run_pipeline(config, wound_photo, out_a)

    stack = read_archive_file(out_a / "captured.atnp")
    assert validate_stack(stack, target=64) == []

    import json

    regions = json.loads((out_a / "regions.json").read_text())
    assert len(regions) >= 2

    # rerun with fixed settings: the capture and every artifact are bit-stable
    out_b = tmp_path / "run_b"
    run_pipeline(config, wound_photo, out_b)
    assert (out_a / "captured.atnp").read_bytes() == (out_b / "captured.atnp").read_bytes()
    assert (out_a / "label_mask.png").read_bytes() == (out_b / "label_mask.png").read_bytes()
    assert (out_a / "confidence.png").read_bytes() == (out_b / "confidence.png").read_bytes()


def test_smoke_checkpoint_backend(tmp_path, wound_photo):
    diffusers = pytest.importorskip("diffusers", reason="stable-diffusion extra not installed")
    from attn_extractor.request import DEFAULT_MODEL, ExtractionRequest
    from attn_extractor import sd_backend

    try:
        result = sd_backend.run(
            ExtractionRequest(image=wound_photo, out=tmp_path / "o.atnp", model=DEFAULT_MODEL)
        )
    except Exception as exc:  # no weights in this environment
        pytest.skip(f"checkpoint unavailable: {exc}")
    assert set(result.census()) <= {8, 16, 32, 64}
