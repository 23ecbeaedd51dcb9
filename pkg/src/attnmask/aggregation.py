"""Fusion of multi-resolution attention tensors into one target-resolution tensor.

Each layer's 4-D tensor is upsampled along its last two axes to the target
grid, then combined per target location: the layer contributes the map at the
floor-divided source location, scaled by its weight. The weighted sum for each
location is renormalized once at the end so every fused 2-D map is a valid
probability distribution. Weights default to resolution-proportional
(higher-resolution layers carry proportionally more weight) with a uniform
mode for ablation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .resample import bilinear_weight_matrix
from .stack import AttentionStack, Resolution

WEIGHT_SUM_TOL = 1e-9
MAP_SUM_TOL = 1e-5


@dataclass(frozen=True)
class WeightVector:
    """Per-layer non-negative weights summing to 1 (within 1e-9)."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.weights:
            raise ValueError("weight vector must be non-empty")
        if any(w < 0 for w in self.weights):
            raise ValueError(f"weights must be non-negative, got {self.weights}")
        total = sum(self.weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 within {WEIGHT_SUM_TOL:g}, got {total!r}")

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class AggregatedTensor:
    """Fused (R, R, R, R) float32 tensor of normalized 2-D probability maps."""

    target: int
    data: np.ndarray

    def __post_init__(self) -> None:
        r = self.target
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.shape != (r, r, r, r):
            raise ValueError(f"data shape {arr.shape} does not match target {r}")
        if np.any(arr < 0):
            raise ValueError("fused maps must be non-negative")
        sums = arr.sum(axis=(2, 3), dtype=np.float64)
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > MAP_SUM_TOL:
            raise ValueError(f"fused maps must each sum to 1 within {MAP_SUM_TOL:g} (worst off by {worst:g})")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    def maps(self) -> np.ndarray:
        """View as (R*R, R*R): one flattened distribution per grid location."""
        r = self.target
        return self.data.reshape(r * r, r * r)


def compute_weights(resolutions: Sequence[Resolution], mode: str = "proportional") -> WeightVector:
    """Layer weights: ``proportional`` to grid side, or ``uniform``."""
    if not resolutions:
        raise ValueError("resolution list must be non-empty")
    if mode == "proportional":
        sides = np.asarray([r.side for r in resolutions], dtype=np.float64)
        return WeightVector(tuple(sides / sides.sum()))
    if mode == "uniform":
        n = len(resolutions)
        return WeightVector((1.0 / n,) * n)
    raise ValueError(f"unknown weight mode {mode!r} (expected 'proportional' or 'uniform')")


def upsample_maps(data: np.ndarray, target: int) -> np.ndarray:
    """Upsample the last two axes of an (s, s, s, s) tensor to (s, s, R, R)."""
    s = data.shape[0]
    if s == target:
        # half-pixel mapping at equal sizes is the identity; skip the matmuls
        return np.array(data, dtype=np.float64)
    w = bilinear_weight_matrix(s, target)
    flat = np.asarray(data, dtype=np.float64).reshape(s * s, s, s)
    up = np.matmul(np.matmul(w, flat), w.T)
    return up.reshape(s, s, target, target)


def aggregate_stack(
    stack: AttentionStack, weights: WeightVector, target: int = 64
) -> AggregatedTensor:
    """Fuse every self-attention layer into one (R, R, R, R) tensor.

    For target location (I, J), layer k at side s contributes its upsampled map
    at source location (I // d, J // d) with d = R // s, scaled by weight k;
    the summed map is renormalized to a distribution. Arithmetic runs in
    float64 and is rounded to float32 only at the contract boundary.
    """
    if len(weights) != len(stack.self_attention):
        raise ValueError(
            f"weight count {len(weights)} != self-attention layer count {len(stack.self_attention)}"
        )
    for tensor in stack.self_attention:
        if not tensor.resolution.divides(target):
            raise ValueError(
                f"layer {tensor.layer_index}: resolution {tensor.resolution.side} "
                f"does not divide target {target}"
            )

    acc = np.zeros((target, target, target, target), dtype=np.float64)
    for tensor, weight in zip(stack.self_attention, weights.weights):
        side = tensor.resolution.side
        delta = target // side
        up = upsample_maps(tensor.data, target)
        np.multiply(up, weight, out=up)
        if delta == 1:
            np.add(acc, up, out=acc)
        else:
            # floor-divided source indexing without materializing the repeat
            view = acc.reshape(side, delta, side, delta, target, target)
            view += up[:, None, :, None, :, :]

    sums = acc.sum(axis=(2, 3), keepdims=True)
    if np.any(sums <= 0):
        raise ValueError("aggregation produced an all-zero map; input rows are not distributions")
    acc /= sums
    return AggregatedTensor(target=target, data=acc.astype(np.float32))
