from __future__ import annotations

import numpy as np
import pytest

from attnmask.aggregation import (
    AggregatedTensor,
    WeightVector,
    aggregate_stack,
    compute_weights,
)
from attnmask.stack import AttentionStack, AttentionTensor, Resolution
from attnmask.synthetic import random_stack

from conftest import one_hot_tensor, uniform_tensor
from reference import brute_force_aggregate


def test_proportional_weights_8_16():
    w = compute_weights([Resolution(8), Resolution(16)], "proportional")
    np.testing.assert_allclose(w.weights, [1 / 3, 2 / 3], atol=1e-15)


def test_uniform_weights():
    w = compute_weights([Resolution(8), Resolution(16)], "uniform")
    assert w.weights == (0.5, 0.5)


def test_single_resolution_normalizes_to_one():
    assert compute_weights([Resolution(64)], "proportional").weights == (1.0,)


def test_empty_resolution_list_rejected():
    with pytest.raises(ValueError, match="non-empty"):
        compute_weights([], "proportional")


def test_weight_vector_must_sum_to_one():
    with pytest.raises(ValueError, match="sum to 1"):
        WeightVector((0.5, 0.6))


def test_weight_scaling_invariance():
    sides = [Resolution(8), Resolution(16), Resolution(32)]
    base = compute_weights(sides, "proportional")
    # proportionality constant cancels: tripling every side changes nothing
    scaled = compute_weights([Resolution(3 * r.side) for r in sides], "proportional")
    np.testing.assert_allclose(base.weights, scaled.weights, atol=1e-15)


def test_identity_single_layer_at_target():
    stack = AttentionStack(self_attention=(uniform_tensor(4),))
    out = aggregate_stack(stack, WeightVector((1.0,)), target=4)
    np.testing.assert_allclose(out.data, stack.self_attention[0].data, atol=1e-7)


def test_two_layer_hand_computation():
    # res-1 layer (constant map [[1]]) + res-2 one-hot layer, weights 1/3, 2/3:
    # location (0,0) fuses to [[1, 1/3], [1/3, 1/3]] -> normalized [[0.5, 1/6], [1/6, 1/6]]
    res1 = AttentionTensor(0, Resolution(1), np.ones((1, 1, 1, 1), dtype=np.float32))
    res2 = one_hot_tensor(2, layer=1)
    stack = AttentionStack(self_attention=(res1, res2))
    out = aggregate_stack(stack, WeightVector((1 / 3, 2 / 3)), target=2)
    np.testing.assert_allclose(
        out.data[0, 0], [[0.5, 1 / 6], [1 / 6, 1 / 6]], atol=1e-7
    )
    np.testing.assert_allclose(out.data[1, 1], [[1 / 6, 1 / 6], [1 / 6, 0.5]], atol=1e-7)


def test_all_uniform_layers_stay_uniform():
    stack = AttentionStack(self_attention=(uniform_tensor(2, 0), uniform_tensor(4, 1)))
    weights = compute_weights(stack.resolutions, "proportional")
    out = aggregate_stack(stack, weights, target=4)
    np.testing.assert_allclose(out.data, 1.0 / 16.0, atol=1e-7)


def test_every_map_is_normalized():
    rng = np.random.default_rng(11)
    stack = random_stack({2: 1, 4: 2, 8: 1}, rng)
    out = aggregate_stack(stack, compute_weights(stack.resolutions), target=8)
    sums = out.data.sum(axis=(2, 3), dtype=np.float64)
    np.testing.assert_allclose(sums, 1.0, atol=1e-5)
    assert out.data.min() >= 0


def test_weight_count_mismatch_rejected(tiny_stack):
    with pytest.raises(ValueError, match="count"):
        aggregate_stack(tiny_stack, WeightVector((0.5, 0.5)), target=2)


def test_resolution_must_divide_target():
    stack = AttentionStack(self_attention=(uniform_tensor(3),))
    with pytest.raises(ValueError, match="divide"):
        aggregate_stack(stack, WeightVector((1.0,)), target=4)


def test_matches_brute_force_reference():
    rng = np.random.default_rng(12)
    for _ in range(5):
        target = int(rng.choice([4, 8]))
        census = {}
        for side in [1, 2, 4, 8]:
            if side <= target and target % side == 0 and rng.random() < 0.7:
                census[side] = int(rng.integers(1, 3))
        if not census:
            census = {target: 1}
        stack = random_stack(census, rng)
        mode = "uniform" if rng.random() < 0.5 else "proportional"
        weights = compute_weights(stack.resolutions, mode)
        engine = aggregate_stack(stack, weights, target=target)
        oracle = brute_force_aggregate(stack, list(weights.weights), target)
        np.testing.assert_allclose(engine.data, oracle, atol=1e-9)


def test_convexity_on_small_instance():
    # fused maps lie in the convex hull of upsampled-then-normalized layer maps
    rng = np.random.default_rng(13)
    stack = random_stack({1: 1, 2: 1}, rng)
    weights = compute_weights(stack.resolutions)
    out = aggregate_stack(stack, weights, target=2)
    # bounds check, elementwise: min/max of contributing maps bound the result
    from attnmask.aggregation import upsample_maps

    ups = []
    for tensor in stack.self_attention:
        up = upsample_maps(tensor.data, 2)
        delta = 2 // tensor.resolution.side
        up = np.repeat(np.repeat(up, delta, axis=0), delta, axis=1)
        ups.append(up / up.sum(axis=(2, 3), keepdims=True))
    stacked = np.stack(ups)
    np.testing.assert_array_less(out.data, stacked.max(axis=0) + 1e-6)
    np.testing.assert_array_less(stacked.min(axis=0) - 1e-6, out.data)


def test_aggregated_tensor_validates_shape():
    with pytest.raises(ValueError, match="shape"):
        AggregatedTensor(target=2, data=np.ones((2, 2, 2), dtype=np.float32))
