"""Attention tensor containers and their validation rules.

A capture run over a latent grid yields one 4-D self-attention tensor per
transformer layer (entry ``(i, j, y, z)`` is the attention probability from
location ``(i, j)`` to ``(y, z)``), optionally one 3-D cross-attention tensor
per layer (location to prompt token), and metadata describing the capture.
All containers are immutable after construction: array payloads are marked
read-only so stacks can be shared freely across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

ROW_SUM_TOL = 1e-3
DEFAULT_TIMESTEP = 300
DEFAULT_TARGET = 64


def _as_readonly_f32(data: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=np.float32)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Resolution:
    """Side length of a square latent grid (8, 16, 32 or 64 in practice)."""

    side: int

    def __post_init__(self) -> None:
        if self.side < 1:
            raise ValueError(f"resolution side must be >= 1, got {self.side}")

    def divides(self, target: int) -> bool:
        return target % self.side == 0


@dataclass(frozen=True)
class AttentionTensor:
    """One layer's self-attention probabilities, shape (s, s, s, s) float32."""

    layer_index: int
    resolution: Resolution
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.layer_index < 0:
            raise ValueError(f"layer_index must be >= 0, got {self.layer_index}")
        s = self.resolution.side
        arr = _as_readonly_f32(self.data)
        if arr.shape != (s, s, s, s):
            raise ValueError(
                f"layer {self.layer_index}: data shape {arr.shape} does not match resolution {s}"
            )
        object.__setattr__(self, "data", arr)


@dataclass(frozen=True)
class CrossAttentionTensor:
    """One layer's location-to-token probabilities, shape (s, s, T) float32."""

    layer_index: int
    resolution: Resolution
    token_count: int
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.token_count < 1:
            raise ValueError(f"token_count must be >= 1, got {self.token_count}")
        s = self.resolution.side
        arr = _as_readonly_f32(self.data)
        if arr.shape != (s, s, self.token_count):
            raise ValueError(
                f"cross layer {self.layer_index}: data shape {arr.shape} does not match "
                f"(side={s}, tokens={self.token_count})"
            )
        object.__setattr__(self, "data", arr)


@dataclass(frozen=True)
class CaptureMetadata:
    """Provenance of a capture: model, timestep, prompt, source image."""

    model_id: str = ""
    timestep: int = DEFAULT_TIMESTEP
    prompt: str = ""
    token_strings: tuple[str, ...] = ()
    image_source: str = ""
    latent_size: int = DEFAULT_TARGET

    def __post_init__(self) -> None:
        object.__setattr__(self, "token_strings", tuple(self.token_strings))


@dataclass(frozen=True)
class AttentionStack:
    """Ordered self-attention tensors, optional cross-attention, and metadata."""

    self_attention: tuple[AttentionTensor, ...]
    cross_attention: Optional[tuple[CrossAttentionTensor, ...]] = None
    metadata: CaptureMetadata = field(default_factory=CaptureMetadata)

    def __post_init__(self) -> None:
        object.__setattr__(self, "self_attention", tuple(self.self_attention))
        if self.cross_attention is not None:
            object.__setattr__(self, "cross_attention", tuple(self.cross_attention))
        if not self.self_attention:
            raise ValueError("stack must contain at least one self-attention tensor")

    @property
    def resolutions(self) -> list[Resolution]:
        return [t.resolution for t in self.self_attention]

    def census(self) -> dict[int, int]:
        """Map of resolution side -> layer count, e.g. {64: 5, 32: 5, 16: 5, 8: 1}."""
        counts: dict[int, int] = {}
        for t in self.self_attention:
            counts[t.resolution.side] = counts.get(t.resolution.side, 0) + 1
        return counts


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by :func:`validate_stack`."""

    code: str
    message: str
    layer_index: Optional[int] = None


def _row_sum_violations(name: str, tensor, sum_axes: tuple[int, ...]) -> list[Violation]:
    """Check non-negativity and per-row probability sums for one tensor."""
    out: list[Violation] = []
    data = tensor.data
    neg = np.argwhere(data < 0)
    if len(neg):
        first = tuple(int(x) for x in neg[0])
        out.append(
            Violation(
                "negative-entry",
                f"{name} layer {tensor.layer_index}: {len(neg)} negative entr"
                f"{'y' if len(neg) == 1 else 'ies'}, first at {first}",
                tensor.layer_index,
            )
        )
    sums = data.sum(axis=sum_axes, dtype=np.float64)
    bad = np.argwhere(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if len(bad):
        i, j = (int(x) for x in bad[0])
        out.append(
            Violation(
                "row-sum",
                f"{name} layer {tensor.layer_index}: {len(bad)} row(s) do not sum to 1 "
                f"within {ROW_SUM_TOL:g}, first at (i={i}, j={j}) with sum {sums[i, j]:.6f}",
                tensor.layer_index,
            )
        )
    return out


def validate_stack(stack: AttentionStack, target: Optional[int] = None) -> list[Violation]:
    """Enumerate every invariant violation in ``stack`` (empty list = valid).

    Pure and total: never raises on a structurally constructible stack. When
    ``target`` is given, each resolution must also divide it (the engine's
    working resolution); archives themselves carry no target, so the check is
    opt-in.
    """
    violations: list[Violation] = []

    prev = -1
    for tensor in stack.self_attention:
        if tensor.layer_index <= prev:
            violations.append(
                Violation(
                    "layer-order",
                    f"self layer_index {tensor.layer_index} not strictly increasing "
                    f"(previous {prev})",
                    tensor.layer_index,
                )
            )
        prev = tensor.layer_index
        if target is not None and not tensor.resolution.divides(target):
            violations.append(
                Violation(
                    "resolution-divides",
                    f"self layer {tensor.layer_index}: side {tensor.resolution.side} "
                    f"does not divide target {target}",
                    tensor.layer_index,
                )
            )
        violations.extend(_row_sum_violations("self", tensor, (2, 3)))

    if stack.cross_attention is not None:
        if len(stack.cross_attention) != len(stack.self_attention):
            violations.append(
                Violation(
                    "sequence-mismatch",
                    f"cross-attention count {len(stack.cross_attention)} != "
                    f"self-attention count {len(stack.self_attention)}",
                )
            )
        for cross, self_t in zip(stack.cross_attention, stack.self_attention):
            if (
                cross.layer_index != self_t.layer_index
                or cross.resolution != self_t.resolution
            ):
                violations.append(
                    Violation(
                        "sequence-mismatch",
                        f"cross layer {cross.layer_index} (side {cross.resolution.side}) does "
                        f"not match self layer {self_t.layer_index} "
                        f"(side {self_t.resolution.side})",
                        cross.layer_index,
                    )
                )
            violations.extend(_row_sum_violations("cross", cross, (2,)))
            if len(stack.metadata.token_strings) != cross.token_count:
                violations.append(
                    Violation(
                        "token-count",
                        f"cross layer {cross.layer_index}: token_count {cross.token_count} != "
                        f"metadata token_strings length {len(stack.metadata.token_strings)}",
                        cross.layer_index,
                    )
                )

    if stack.metadata.timestep < 1:
        violations.append(
            Violation("timestep", f"metadata timestep must be >= 1, got {stack.metadata.timestep}")
        )
    return violations


def stacks_equal(a: AttentionStack, b: AttentionStack) -> bool:
    """Bitwise equality on all tensor payloads plus metadata equality."""
    if len(a.self_attention) != len(b.self_attention):
        return False
    for ta, tb in zip(a.self_attention, b.self_attention):
        if ta.layer_index != tb.layer_index or ta.resolution != tb.resolution:
            return False
        if ta.data.tobytes() != tb.data.tobytes():
            return False
    if (a.cross_attention is None) != (b.cross_attention is None):
        return False
    if a.cross_attention is not None:
        if len(a.cross_attention) != len(b.cross_attention):
            return False
        for ca, cb in zip(a.cross_attention, b.cross_attention):
            if (
                ca.layer_index != cb.layer_index
                or ca.resolution != cb.resolution
                or ca.token_count != cb.token_count
            ):
                return False
            if ca.data.tobytes() != cb.data.tobytes():
                return False
    return a.metadata == b.metadata
