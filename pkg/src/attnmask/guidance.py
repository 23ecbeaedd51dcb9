"""Prompt-driven relevance maps and region ranking from cross-attention.

Cross-attention slices for the selected prompt tokens are summed per layer,
upsampled with the shared bilinear convention, combined with the same
per-layer weights used for self-attention fusion, and renormalized into a
relevance distribution. Guidance then ranks the label-mask regions by mean
relevance instead of modifying the merging objective, keeping the
unconditioned pipeline intact; an experimental pre-merge anchor weighting
hook is exposed separately.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .aggregation import WeightVector
from .errors import MissingCrossAttentionError
from .masking import LabelMask
from .resample import resize_bilinear, upsample_bilinear
from .stack import AttentionStack, CaptureMetadata

_SPECIAL_TOKEN = re.compile(r"^<\|.*\|>$")


@dataclass(frozen=True)
class RelevanceMap:
    """(R, R) distribution of prompt relevance over the latent grid."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"relevance must be square 2-D, got shape {arr.shape}")
        total = arr.sum(dtype=np.float64)
        if np.any(arr < 0) or abs(total - 1.0) > 1e-5:
            raise ValueError(f"relevance must be a distribution (sum {total!r})")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def side(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class TokenSelection:
    """Prompt token positions (and their strings) that drive relevance."""

    indices: tuple[int, ...]
    strings: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "strings", tuple(self.strings))
        if not self.indices:
            raise ValueError("token selection must be non-empty")
        if len(self.indices) != len(self.strings):
            raise ValueError("indices and strings must have equal length")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError(f"duplicate token indices in {self.indices}")


def default_token_selection(metadata: CaptureMetadata) -> TokenSelection:
    """All non-special prompt tokens (specials look like ``<|...|>``)."""
    picked = [
        (i, s) for i, s in enumerate(metadata.token_strings) if not _SPECIAL_TOKEN.match(s)
    ]
    if not picked:
        raise ValueError("metadata holds no non-special tokens to select")
    return TokenSelection(
        indices=tuple(i for i, _ in picked), strings=tuple(s for _, s in picked)
    )


def build_relevance_map(
    stack: AttentionStack,
    weights: WeightVector,
    target: int,
    tokens: TokenSelection,
) -> RelevanceMap:
    """Weighted, upsampled, token-summed cross-attention as a distribution."""
    if stack.cross_attention is None:
        raise MissingCrossAttentionError(
            "stack has no cross-attention records; re-extract with a prompt"
        )
    if len(weights) != len(stack.cross_attention):
        raise ValueError(
            f"weight count {len(weights)} != cross-attention layer count {len(stack.cross_attention)}"
        )
    acc = np.zeros((target, target), dtype=np.float64)
    for cross, weight in zip(stack.cross_attention, weights.weights):
        bad = [i for i in tokens.indices if i >= cross.token_count]
        if bad:
            raise ValueError(
                f"token indices {bad} out of range for layer {cross.layer_index} "
                f"(token_count {cross.token_count})"
            )
        summed = cross.data[:, :, list(tokens.indices)].sum(axis=2, dtype=np.float64)
        acc += weight * upsample_bilinear(summed, target)
    total = acc.sum()
    if total <= 0:
        raise ValueError("selected tokens carry zero attention mass")
    return RelevanceMap(values=acc / total)


def score_regions(mask: LabelMask, relevance: RelevanceMap) -> list[tuple[int, float]]:
    """(label, mean relevance) per non-empty label, best first.

    The relevance grid is upsampled to mask dims internally and renormalized,
    so scores weighted by region area sum to the total mass of 1. Ties order
    by lower label.
    """
    field = resize_bilinear(relevance.values, mask.height, mask.width)
    field = field / field.sum()
    labels = mask.labels
    areas = np.bincount(labels.ravel(), minlength=mask.num_labels)
    mass = np.bincount(labels.ravel(), weights=field.ravel(), minlength=mask.num_labels)
    scores = [
        (label, float(mass[label] / areas[label]))
        for label in range(mask.num_labels)
        if areas[label] > 0
    ]
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores


def auto_select(
    scores: list[tuple[int, float]], policy: str = "top1", ratio: float = 0.5
) -> set[int]:
    """Pick labels from ranked scores: the single best, or all within a ratio
    of the best score."""
    if not scores:
        raise ValueError("scores must be non-empty")
    if policy == "top1":
        return {scores[0][0]}
    if policy == "ratio":
        if not 0 < ratio <= 1:
            raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
        best = scores[0][1]
        return {label for label, score in scores if score >= ratio * best}
    raise ValueError(f"unknown selection policy {policy!r} (expected 'top1' or 'ratio')")


def weight_anchor_maps(anchors: np.ndarray, relevance: RelevanceMap) -> np.ndarray:
    """Experimental: bias anchors by relevance before merging.

    Each anchor map is multiplied element-wise by the relevance grid and
    renormalized; an anchor whose product vanishes is kept unchanged rather
    than degenerating to NaN. Off by default because it alters the
    unconditioned pipeline's behavior.
    """
    maps = np.asarray(anchors, dtype=np.float64)
    if maps.shape[1:] != relevance.values.shape:
        raise ValueError(
            f"anchor map shape {maps.shape[1:]} does not match relevance {relevance.values.shape}"
        )
    out = maps * relevance.values[None, :, :]
    sums = out.sum(axis=(1, 2), keepdims=True)
    degenerate = (sums <= 0).reshape(-1)
    out[degenerate] = maps[degenerate]
    sums = out.sum(axis=(1, 2), keepdims=True)
    return out / sums
