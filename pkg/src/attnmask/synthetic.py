"""Deterministic synthetic attention stacks for tests, demos, and fixtures.

Two generators: fully random softmax rows (for round-trip and property
checks), and a structured variant whose rows attend mostly within one of a
few rectangular zones, which gives the merging stage genuinely clusterable
input and the pipeline multiple regions to find.
"""
from __future__ import annotations

import numpy as np

from .stack import (
    AttentionStack,
    AttentionTensor,
    CaptureMetadata,
    CrossAttentionTensor,
    Resolution,
)

DEFAULT_CENSUS = {64: 5, 32: 5, 16: 5, 8: 1}


def _softmax_rows(raw: np.ndarray) -> np.ndarray:
    rows = np.exp(raw - raw.max(axis=-1, keepdims=True))
    rows /= rows.sum(axis=-1, keepdims=True)
    return rows


def random_stack(
    census: dict[int, int],
    rng: np.random.Generator,
    tokens: tuple[str, ...] = (),
    metadata: CaptureMetadata | None = None,
) -> AttentionStack:
    """Random valid stack with the given {side: layer count} census.

    Layers are emitted largest side first (matching capture order of the
    default census) with consecutive layer indices. When ``tokens`` is
    non-empty, matching cross-attention records are generated too.
    """
    self_tensors = []
    cross_tensors = []
    layer = 0
    for side in sorted(census, reverse=True):
        for _ in range(census[side]):
            raw = rng.standard_normal((side, side, side * side))
            data = _softmax_rows(raw).reshape(side, side, side, side)
            self_tensors.append(
                AttentionTensor(layer_index=layer, resolution=Resolution(side), data=data)
            )
            if tokens:
                raw_c = rng.standard_normal((side, side, len(tokens)))
                cross_tensors.append(
                    CrossAttentionTensor(
                        layer_index=layer,
                        resolution=Resolution(side),
                        token_count=len(tokens),
                        data=_softmax_rows(raw_c),
                    )
                )
            layer += 1
    if metadata is None:
        metadata = CaptureMetadata(
            model_id="synthetic", token_strings=tokens, latent_size=max(census)
        )
    return AttentionStack(
        self_attention=tuple(self_tensors),
        cross_attention=tuple(cross_tensors) if cross_tensors else None,
        metadata=metadata,
    )


def zone_layout(side: int, zones: int = 2) -> np.ndarray:
    """(side, side) int zone ids: vertical bands for 2, quadrants for 4."""
    grid = np.zeros((side, side), dtype=np.int64)
    if zones == 2:
        grid[:, side // 2 :] = 1
    elif zones == 4:
        grid[: side // 2, side // 2 :] = 1
        grid[side // 2 :, : side // 2] = 2
        grid[side // 2 :, side // 2 :] = 3
    else:
        raise ValueError(f"zones must be 2 or 4, got {zones}")
    return grid


def structured_stack(
    census: dict[int, int],
    rng: np.random.Generator,
    zones: int = 2,
    affinity: float = 12.0,
    tokens: tuple[str, ...] = (),
    zone_token: dict[int, int] | None = None,
) -> AttentionStack:
    """Stack whose rows attend mostly within their own rectangular zone.

    ``affinity`` sets how strongly in-zone logits dominate; noise keeps rows
    distinct. With ``tokens`` given, cross-attention rows put their mass on
    ``zone_token[zone]`` (defaults to token index = zone id).
    """
    self_tensors = []
    cross_tensors = []
    layer = 0
    for side in sorted(census, reverse=True):
        zone = zone_layout(side, zones)
        same = (zone.reshape(-1, 1) == zone.reshape(1, -1)).astype(np.float64)
        for _ in range(census[side]):
            logits = affinity * same + rng.standard_normal((side * side, side * side))
            data = _softmax_rows(logits).reshape(side, side, side, side)
            self_tensors.append(
                AttentionTensor(layer_index=layer, resolution=Resolution(side), data=data)
            )
            if tokens:
                t_index = np.asarray(
                    [(zone_token or {}).get(z, z % len(tokens)) for z in zone.ravel()]
                )
                logits_c = rng.standard_normal((side * side, len(tokens)))
                logits_c[np.arange(side * side), t_index] += affinity
                cross_tensors.append(
                    CrossAttentionTensor(
                        layer_index=layer,
                        resolution=Resolution(side),
                        token_count=len(tokens),
                        data=_softmax_rows(logits_c).reshape(side, side, len(tokens)),
                    )
                )
            layer += 1
    metadata = CaptureMetadata(
        model_id="synthetic-zones", token_strings=tokens, latent_size=max(census)
    )
    return AttentionStack(
        self_attention=tuple(self_tensors),
        cross_attention=tuple(cross_tensors) if cross_tensors else None,
        metadata=metadata,
    )
