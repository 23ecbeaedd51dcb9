from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from attnmask.stack import (
    AttentionStack,
    AttentionTensor,
    CaptureMetadata,
    CrossAttentionTensor,
    Resolution,
)


def uniform_tensor(side: int, layer: int = 0) -> AttentionTensor:
    data = np.full((side, side, side, side), 1.0 / (side * side), dtype=np.float32)
    return AttentionTensor(layer_index=layer, resolution=Resolution(side), data=data)


def one_hot_tensor(side: int, layer: int = 0) -> AttentionTensor:
    """Each location attends entirely to itself."""
    data = np.zeros((side, side, side, side), dtype=np.float32)
    for i in range(side):
        for j in range(side):
            data[i, j, i, j] = 1.0
    return AttentionTensor(layer_index=layer, resolution=Resolution(side), data=data)


@pytest.fixture
def tiny_stack() -> AttentionStack:
    """One 2x2x2x2 layer of uniform rows."""
    return AttentionStack(
        self_attention=(uniform_tensor(2),),
        metadata=CaptureMetadata(model_id="fixture", image_source="memory"),
    )


@pytest.fixture
def cross_stack() -> AttentionStack:
    """Self + cross tensors with a two-token prompt."""
    rng = np.random.default_rng(7)
    side = 4
    raw = rng.random((side, side, side * side))
    self_data = (raw / raw.sum(axis=-1, keepdims=True)).reshape(side, side, side, side)
    raw_c = rng.random((side, side, 2))
    cross_data = raw_c / raw_c.sum(axis=-1, keepdims=True)
    return AttentionStack(
        self_attention=(
            AttentionTensor(layer_index=0, resolution=Resolution(side), data=self_data),
        ),
        cross_attention=(
            CrossAttentionTensor(
                layer_index=0, resolution=Resolution(side), token_count=2, data=cross_data
            ),
        ),
        metadata=CaptureMetadata(
            model_id="fixture",
            prompt="wound",
            token_strings=("<|startoftext|>", "wound"),
            image_source="memory",
        ),
    )
