"""Attention capture plumbing shared by every backend.

Backends produce raw post-softmax attention probabilities shaped
(heads, query_len, key_len); this module reduces over heads, reshapes the
spatial axes to the archive layout, and sanity-checks that rows are still
probability distributions before anything touches disk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-3


def head_reduce(probs: np.ndarray, mode: str = "mean") -> np.ndarray:
    """Collapse the head axis of (heads, q, k) probabilities.

    ``mean`` averages heads; ``sum`` adds them and renormalizes each row. For
    equal-weight softmax heads the two coincide; both are kept because the
    choice is a documented knob, not a fixed convention.
    """
    if probs.ndim != 3:
        raise ValueError(f"expected (heads, q, k), got shape {probs.shape}")
    if mode == "mean":
        return probs.mean(axis=0)
    if mode == "sum":
        summed = probs.sum(axis=0)
        return summed / summed.sum(axis=-1, keepdims=True)
    raise ValueError(f"unknown head mode {mode!r}")


def reshape_self_attention(flat: np.ndarray) -> np.ndarray:
    """(h*w, h*w) row-distributions -> (h, w, h, w) with square grids."""
    q_len, k_len = flat.shape
    if q_len != k_len:
        raise ValueError(f"self-attention must be square, got {flat.shape}")
    side = math.isqrt(q_len)
    if side * side != q_len:
        raise ValueError(f"query length {q_len} is not a square grid")
    return flat.reshape(side, side, side, side)


def reshape_cross_attention(flat: np.ndarray) -> np.ndarray:
    """(h*w, T) token-distributions -> (h, w, T)."""
    q_len, tokens = flat.shape
    side = math.isqrt(q_len)
    if side * side != q_len:
        raise ValueError(f"query length {q_len} is not a square grid")
    return flat.reshape(side, side, tokens)


def check_rows(name: str, tensor: np.ndarray, axes: tuple[int, ...]) -> None:
    sums = tensor.sum(axis=axes, dtype=np.float64)
    worst = float(np.abs(sums - 1.0).max())
    if worst > ROW_SUM_TOL:
        raise ValueError(
            f"{name}: captured rows are not softmax outputs (worst row off by {worst:g})"
        )


@dataclass
class CaptureResult:
    """Everything a backend hands back, ready for the archive writer."""

    self_tensors: list[np.ndarray] = field(default_factory=list)
    cross_tensors: list[np.ndarray] = field(default_factory=list)
    tokens: tuple[str, ...] = ()
    model_id: str = ""
    latent_size: int = 64

    def add_self(self, probs: np.ndarray, head_mode: str) -> None:
        tensor = reshape_self_attention(head_reduce(probs, head_mode)).astype(np.float32)
        check_rows(f"self layer {len(self.self_tensors)}", tensor, (2, 3))
        self.self_tensors.append(tensor)

    def add_cross(self, probs: np.ndarray, head_mode: str) -> None:
        tensor = reshape_cross_attention(head_reduce(probs, head_mode)).astype(np.float32)
        check_rows(f"cross layer {len(self.cross_tensors)}", tensor, (2,))
        self.cross_tensors.append(tensor)

    def census(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for tensor in self.self_tensors:
            counts[tensor.shape[0]] = counts.get(tensor.shape[0], 0) + 1
        return counts
