from __future__ import annotations

import numpy as np
import pytest

from attnmask.aggregation import WeightVector
from attnmask.errors import MissingCrossAttentionError
from attnmask.guidance import (
    RelevanceMap,
    TokenSelection,
    auto_select,
    build_relevance_map,
    default_token_selection,
    score_regions,
    weight_anchor_maps,
)
from attnmask.masking import LabelMask
from attnmask.stack import (
    AttentionStack,
    AttentionTensor,
    CaptureMetadata,
    CrossAttentionTensor,
    Resolution,
)

from conftest import uniform_tensor


def _stack_with_cross(cross_layers, tokens, self_layers=None):
    if self_layers is None:
        self_layers = tuple(
            uniform_tensor(c.resolution.side, layer=c.layer_index) for c in cross_layers
        )
    return AttentionStack(
        self_attention=tuple(self_layers),
        cross_attention=tuple(cross_layers),
        metadata=CaptureMetadata(prompt=" ".join(tokens), token_strings=tokens),
    )


def test_single_layer_one_hot_token_slice():
    side = 2
    data = np.zeros((side, side, 2), dtype=np.float32)
    data[:, :, 1] = 1.0  # all mass on token 1 everywhere
    data[0, 0, 0] = 1.0  # except (0,0), which attends to token 0
    data[0, 0, 1] = 0.0
    cross = CrossAttentionTensor(0, Resolution(side), 2, data)
    stack = _stack_with_cross([cross], ("find", "it"))
    rel = build_relevance_map(stack, WeightVector((1.0,)), side, TokenSelection((0,), ("find",)))
    np.testing.assert_allclose(rel.values, [[1.0, 0.0], [0.0, 0.0]], atol=1e-7)


def test_two_identical_tokens_same_as_one():
    side = 2
    rng = np.random.default_rng(31)
    raw = rng.random((side, side, 1)).astype(np.float32)
    data = np.concatenate([raw, raw], axis=2) / (2 * raw)  # both tokens equal, rows sum to 1
    cross = CrossAttentionTensor(0, Resolution(side), 2, data.astype(np.float32))
    stack = _stack_with_cross([cross], ("a", "b"))
    one = build_relevance_map(stack, WeightVector((1.0,)), side, TokenSelection((0,), ("a",)))
    both = build_relevance_map(
        stack, WeightVector((1.0,)), side, TokenSelection((0, 1), ("a", "b"))
    )
    np.testing.assert_allclose(one.values, both.values, atol=1e-7)


def test_multi_resolution_matches_aggregation_arithmetic():
    # res-1 uniform slice + res-2 one-hot slice, weights [1/3, 2/3]
    # -> [[0.5, 1/6], [1/6, 1/6]] like the aggregation hand example
    c1 = CrossAttentionTensor(0, Resolution(1), 1, np.ones((1, 1, 1), dtype=np.float32))
    data2 = np.zeros((2, 2, 2), dtype=np.float32)
    data2[:, :, 1] = 1.0
    data2[0, 0] = (1.0, 0.0)
    c2 = CrossAttentionTensor(1, Resolution(2), 2, data2)
    stack = AttentionStack(
        self_attention=(uniform_tensor(1, 0), uniform_tensor(2, 1)),
        cross_attention=(c1, c2),
        metadata=CaptureMetadata(token_strings=("x", "y")),
    )
    rel = build_relevance_map(
        stack, WeightVector((1 / 3, 2 / 3)), 2, TokenSelection((0,), ("x",))
    )
    np.testing.assert_allclose(rel.values, [[0.5, 1 / 6], [1 / 6, 1 / 6]], atol=1e-7)


def test_missing_cross_attention_rejected(tiny_stack):
    with pytest.raises(MissingCrossAttentionError):
        build_relevance_map(
            tiny_stack, WeightVector((1.0,)), 2, TokenSelection((0,), ("x",))
        )


def test_token_selection_must_be_nonempty():
    with pytest.raises(ValueError, match="non-empty"):
        TokenSelection((), ())


def test_token_index_out_of_range(cross_stack):
    with pytest.raises(ValueError, match="out of range"):
        build_relevance_map(
            cross_stack, WeightVector((1.0,)), 4, TokenSelection((5,), ("beyond",))
        )


def test_default_selection_skips_specials():
    meta = CaptureMetadata(
        token_strings=("<|startoftext|>", "infected", "wound", "<|endoftext|>")
    )
    sel = default_token_selection(meta)
    assert sel.indices == (1, 2)
    assert sel.strings == ("infected", "wound")


def test_default_selection_rejects_all_special():
    meta = CaptureMetadata(token_strings=("<|startoftext|>", "<|endoftext|>"))
    with pytest.raises(ValueError, match="non-special"):
        default_token_selection(meta)


def test_relevance_is_distribution(cross_stack):
    rel = build_relevance_map(
        cross_stack, WeightVector((1.0,)), 8, TokenSelection((1,), ("wound",))
    )
    assert rel.values.sum() == pytest.approx(1.0, abs=1e-9)
    assert rel.values.min() >= 0


def test_score_regions_uniform_relevance_equal_scores():
    labels = np.array([[0, 1], [1, 2]], dtype=np.int32)
    mask = LabelMask(width=2, height=2, labels=labels, num_labels=3)
    rel = RelevanceMap(values=np.full((2, 2), 0.25))
    scores = score_regions(mask, rel)
    assert [label for label, _ in scores] == [0, 1, 2]  # ties resolve by label
    assert len({round(s, 12) for _, s in scores}) == 1


def test_score_regions_hand_example():
    labels = np.array([[0, 1], [1, 1]], dtype=np.int32)
    mask = LabelMask(width=2, height=2, labels=labels, num_labels=2)
    rel = RelevanceMap(values=np.array([[0.7, 0.1], [0.1, 0.1]]))
    scores = dict(score_regions(mask, rel))
    assert scores[0] == pytest.approx(0.7)
    assert scores[1] == pytest.approx(0.1)


def test_score_regions_concentrated_region_wins():
    labels = np.array([[0, 0], [0, 2]], dtype=np.int32)
    mask = LabelMask(width=2, height=2, labels=labels, num_labels=3)
    values = np.zeros((2, 2))
    values[1, 1] = 1.0
    scores = score_regions(mask, RelevanceMap(values=values))
    assert scores[0][0] == 2


def test_score_mass_identity():
    rng = np.random.default_rng(32)
    labels = rng.integers(0, 3, size=(6, 6)).astype(np.int32)
    mask = LabelMask(width=6, height=6, labels=labels, num_labels=3)
    raw = rng.random((3, 3))
    rel = RelevanceMap(values=raw / raw.sum())
    scores = score_regions(mask, rel)
    areas = {label: int((labels == label).sum()) for label in range(3)}
    total = sum(score * areas[label] for label, score in scores)
    assert total == pytest.approx(1.0, abs=1e-4)


def test_auto_select_top1():
    assert auto_select([(2, 0.9), (0, 0.3)], "top1") == {2}


def test_auto_select_ratio_threshold():
    assert auto_select([(2, 0.9), (0, 0.3)], "ratio", ratio=0.3) == {2, 0}
    assert auto_select([(2, 0.9), (0, 0.3)], "ratio", ratio=0.5) == {2}


def test_auto_select_single_region_both_policies():
    assert auto_select([(4, 0.2)], "top1") == {4}
    assert auto_select([(4, 0.2)], "ratio", ratio=0.9) == {4}


def test_top1_subset_of_ratio():
    rng = np.random.default_rng(33)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        scores = sorted(
            [(int(k), float(rng.random())) for k in range(n)], key=lambda p: (-p[1], p[0])
        )
        rho = float(rng.uniform(0.05, 1.0))
        assert auto_select(scores, "top1") <= auto_select(scores, "ratio", ratio=rho)


def test_selection_scale_invariance():
    scores = [(0, 0.8), (1, 0.5), (2, 0.1)]
    scaled = [(label, 3.7 * s) for label, s in scores]
    assert auto_select(scores, "ratio", ratio=0.4) == auto_select(scaled, "ratio", ratio=0.4)


def test_auto_select_empty_rejected():
    with pytest.raises(ValueError, match="non-empty"):
        auto_select([], "top1")


def test_weight_anchor_maps_biases_and_normalizes():
    anchors = np.stack([np.full((2, 2), 0.25), np.array([[0.7, 0.1], [0.1, 0.1]])])
    rel = RelevanceMap(values=np.array([[0.97, 0.01], [0.01, 0.01]]))
    out = weight_anchor_maps(anchors, rel)
    np.testing.assert_allclose(out.sum(axis=(1, 2)), 1.0, atol=1e-12)
    assert out[0, 0, 0] > 0.9  # uniform anchor bends toward the relevance peak
