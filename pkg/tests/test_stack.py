from __future__ import annotations

import numpy as np
import pytest

from attnmask.stack import (
    AttentionStack,
    AttentionTensor,
    CaptureMetadata,
    CrossAttentionTensor,
    Resolution,
    validate_stack,
)

from conftest import uniform_tensor


def test_resolution_rejects_nonpositive_side():
    with pytest.raises(ValueError):
        Resolution(0)


def test_tensor_shape_must_match_resolution():
    with pytest.raises(ValueError, match="shape"):
        AttentionTensor(0, Resolution(2), np.zeros((2, 2, 2, 3), dtype=np.float32))


def test_stack_requires_at_least_one_layer():
    with pytest.raises(ValueError, match="at least one"):
        AttentionStack(self_attention=())


def test_data_is_immutable(tiny_stack):
    with pytest.raises(ValueError):
        tiny_stack.self_attention[0].data[0, 0, 0, 0] = 2.0


def test_conforming_stack_has_empty_report(tiny_stack):
    assert validate_stack(tiny_stack) == []


def test_negative_entry_reported_with_layer_and_indices():
    data = np.full((2, 2, 2, 2), 0.25, dtype=np.float32)
    data[1, 0, 1, 1] = -0.25
    data[1, 0, 0, 0] = 0.75
    stack = AttentionStack(self_attention=(AttentionTensor(3, Resolution(2), data),))
    report = validate_stack(stack)
    assert len(report) == 1
    assert report[0].code == "negative-entry"
    assert report[0].layer_index == 3
    assert "(1, 0, 1, 1)" in report[0].message


def test_row_sum_violation_names_layer_i_j():
    data = np.full((2, 2, 2, 2), 0.25, dtype=np.float32)
    data[0, 1] = 0.125  # row (0, 1) sums to 0.5
    stack = AttentionStack(self_attention=(AttentionTensor(0, Resolution(2), data),))
    report = validate_stack(stack)
    assert [v.code for v in report] == ["row-sum"]
    assert "(i=0, j=1)" in report[0].message


def test_layer_order_must_strictly_increase():
    stack = AttentionStack(
        self_attention=(uniform_tensor(2, layer=1), uniform_tensor(2, layer=1))
    )
    assert [v.code for v in validate_stack(stack)] == ["layer-order"]


def test_cross_sequence_mismatch_is_one_violation():
    cross = CrossAttentionTensor(
        layer_index=0,
        resolution=Resolution(4),  # self layer is 2x2
        token_count=1,
        data=np.ones((4, 4, 1), dtype=np.float32),
    )
    stack = AttentionStack(
        self_attention=(uniform_tensor(2),),
        cross_attention=(cross,),
        metadata=CaptureMetadata(token_strings=("a",)),
    )
    report = validate_stack(stack)
    assert [v.code for v in report] == ["sequence-mismatch"]


def test_token_count_must_match_metadata(tiny_stack):
    cross = CrossAttentionTensor(
        layer_index=0,
        resolution=Resolution(2),
        token_count=2,
        data=np.full((2, 2, 2), 0.5, dtype=np.float32),
    )
    stack = AttentionStack(
        self_attention=tiny_stack.self_attention,
        cross_attention=(cross,),
        metadata=CaptureMetadata(token_strings=("a", "b", "c")),
    )
    assert [v.code for v in validate_stack(stack)] == ["token-count"]


def test_timestep_must_be_positive(tiny_stack):
    stack = AttentionStack(
        self_attention=tiny_stack.self_attention,
        metadata=CaptureMetadata(timestep=0),
    )
    assert [v.code for v in validate_stack(stack)] == ["timestep"]


def test_target_divisibility_checked_only_when_given():
    stack = AttentionStack(self_attention=(uniform_tensor(3),))
    assert validate_stack(stack) == []
    report = validate_stack(stack, target=64)
    assert [v.code for v in report] == ["resolution-divides"]


def test_validation_is_pure(tiny_stack):
    before = tiny_stack.self_attention[0].data.copy()
    validate_stack(tiny_stack)
    np.testing.assert_array_equal(tiny_stack.self_attention[0].data, before)
