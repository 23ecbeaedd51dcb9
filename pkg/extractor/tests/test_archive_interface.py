"""The writer must produce archives the segmentation engine reads bit-true.

attnmask is the consumer package; these tests cross the interface on purpose.
"""
from __future__ import annotations

import numpy as np
import pytest

from attn_extractor.atnp import write_archive

from attnmask.archive import read_archive_file
from attnmask.stack import validate_stack


def _softmax_4d(rng, side):
    raw = rng.random((side, side, side * side)) + 0.05
    return (raw / raw.sum(axis=-1, keepdims=True)).reshape(side, side, side, side)


def _softmax_cross(rng, side, tokens):
    raw = rng.random((side, side, tokens)) + 0.05
    return raw / raw.sum(axis=-1, keepdims=True)


def test_engine_reads_written_archive(tmp_path):
    rng = np.random.default_rng(3)
    self_tensors = [_softmax_4d(rng, 4), _softmax_4d(rng, 4), _softmax_4d(rng, 2)]
    cross_tensors = [
        _softmax_cross(rng, 4, 3),
        _softmax_cross(rng, 4, 3),
        _softmax_cross(rng, 2, 3),
    ]
    meta = {
        "model_id": "synthetic",
        "timestep": 300,
        "prompt": "open wound",
        "tokens": ["<|startoftext|>", "open", "wound"],
        "image_source": "x.png",
        "latent_size": 4,
    }
    path = tmp_path / "capture.atnp"
    write_archive(path, self_tensors, cross_tensors, meta)

    stack = read_archive_file(path)
    assert validate_stack(stack) == []
    assert len(stack.self_attention) == 3
    assert stack.census() == {4: 2, 2: 1}
    assert stack.metadata.prompt == "open wound"
    assert stack.metadata.token_strings == ("<|startoftext|>", "open", "wound")
    got = stack.self_attention[0].data
    np.testing.assert_array_equal(got, self_tensors[0].astype(np.float32))


def test_written_bytes_deterministic(tmp_path):
    rng = np.random.default_rng(4)
    tensors = [_softmax_4d(rng, 2)]
    meta = {
        "model_id": "m", "timestep": 1, "prompt": "", "tokens": [],
        "image_source": "", "latent_size": 2,
    }
    a = tmp_path / "a.atnp"
    b = tmp_path / "b.atnp"
    write_archive(a, tensors, [], meta)
    write_archive(b, tensors, [], meta)
    assert a.read_bytes() == b.read_bytes()


def test_writer_rejects_bad_shapes(tmp_path):
    with pytest.raises(ValueError, match="self tensor"):
        write_archive(
            tmp_path / "x.atnp",
            [np.zeros((2, 2, 2, 3))],
            [],
            {"model_id": "m", "timestep": 1, "prompt": "", "tokens": [],
             "image_source": "", "latent_size": 2},
        )
