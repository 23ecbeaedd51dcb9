"""Anchor sampling and iterative KL-threshold merging into object proposals.

An M x M grid of evenly spaced anchor locations seeds the process. The first
pass compares every anchor against all R^2 fused maps and averages those
within symmetric-KL distance tau of it; later rounds merge the resulting
proposals with each other under the same threshold, scanning in index order,
until the configured iteration count is exhausted or a round merges nothing.

Symmetric KL uses the natural logarithm throughout (the base only rescales
tau, so it is fixed and documented) and both distributions are floored at a
small epsilon and renormalized before taking logs, which keeps sparse
upsampled maps finite. Merge order and tie handling are fully deterministic:
identical inputs produce bitwise-identical proposal sets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregation import AggregatedTensor

DEFAULT_EPSILON = 1e-12
PROPOSAL_SUM_TOL = 1e-5


@dataclass(frozen=True)
class MergeParams:
    """Knobs for the merging stage; defaults follow the documented lineage."""

    grid: int = 16
    threshold: float = 1.0
    iterations: int = 3
    epsilon: float = DEFAULT_EPSILON
    member_weighted: bool = False  # documented option: weight group means by member count

    def __post_init__(self) -> None:
        if self.grid < 1:
            raise ValueError(f"grid must be >= 1, got {self.grid}")
        if not self.threshold > 0:
            raise ValueError(f"threshold must be > 0, got {self.threshold}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not (0 < self.epsilon <= 1e-6):
            raise ValueError(f"epsilon must lie in (0, 1e-6], got {self.epsilon}")


@dataclass(frozen=True)
class Proposal:
    """One candidate region: a normalized (R, R) map plus merge provenance.

    ``provenance`` holds flat row-major grid indices (i * R + j) of every
    source map averaged into this proposal, in the order they were absorbed.
    """

    map: np.ndarray
    members: int
    provenance: tuple[int, ...]

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.map, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"proposal map must be 2-D, got shape {arr.shape}")
        if self.members < 1:
            raise ValueError(f"members must be >= 1, got {self.members}")
        total = arr.sum(dtype=np.float64)
        if np.any(arr < 0) or abs(total - 1.0) > PROPOSAL_SUM_TOL:
            raise ValueError(f"proposal map must be a distribution (sum {total!r})")
        arr.flags.writeable = False
        object.__setattr__(self, "map", arr)
        object.__setattr__(self, "provenance", tuple(int(p) for p in self.provenance))


@dataclass(frozen=True)
class ProposalSet:
    """Ordered proposals plus the parameters that produced them."""

    proposals: tuple[Proposal, ...]
    params: MergeParams

    def __post_init__(self) -> None:
        object.__setattr__(self, "proposals", tuple(self.proposals))
        if not 1 <= len(self.proposals) <= self.params.grid ** 2:
            raise ValueError(
                f"proposal count {len(self.proposals)} outside [1, {self.params.grid ** 2}]"
            )

    def __len__(self) -> int:
        return len(self.proposals)

    def stacked(self) -> np.ndarray:
        return np.stack([p.map for p in self.proposals])


def anchor_coordinates(side: int, grid: int) -> list[tuple[int, int]]:
    """Row-major (i, j) coordinates of the M x M evenly spaced anchor points."""
    if grid > side:
        raise ValueError(f"grid {grid} exceeds resolution {side}")
    ticks = [int((m + 0.5) * side / grid) for m in range(grid)]
    return [(i, j) for i in ticks for j in ticks]


def sample_anchors(af: AggregatedTensor, grid: int) -> np.ndarray:
    """(M^2, R, R) anchor maps sampled from the fused tensor in row-major order."""
    coords = anchor_coordinates(af.target, grid)
    return np.stack([af.data[i, j].astype(np.float64) for (i, j) in coords])


def _floor_normalize(rows: np.ndarray, epsilon: float) -> np.ndarray:
    floored = np.maximum(rows, epsilon)
    return floored / floored.sum(axis=-1, keepdims=True)


def kl_distance(p: np.ndarray, q: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> float:
    """Symmetric KL distance: 0.5 * [KL(p||q) + KL(q||p)], natural log.

    Both inputs are floored at ``epsilon`` and renormalized first. Symmetric by
    construction, zero for identical inputs; not a metric (no triangle
    inequality), which the merging rules never rely on.
    """
    pa = np.asarray(p, dtype=np.float64)
    qa = np.asarray(q, dtype=np.float64)
    if pa.shape != qa.shape:
        raise ValueError(f"shape mismatch: {pa.shape} vs {qa.shape}")
    pf = _floor_normalize(pa.ravel(), epsilon)
    qf = _floor_normalize(qa.ravel(), epsilon)
    log_p = np.log(pf)
    log_q = np.log(qf)
    forward = float(np.sum(pf * (log_p - log_q)))
    backward = float(np.sum(qf * (log_q - log_p)))
    return 0.5 * (forward + backward)


def pairwise_kl_matrix(a: np.ndarray, b: np.ndarray, epsilon: float) -> np.ndarray:
    """Symmetric-KL distance matrix between row sets a (n, d) and b (m, d).

    Expands 0.5 * sum (p - q)(log p - log q) into four dot-product terms so the
    whole table reduces to two matrix products; agrees with
    :func:`kl_distance` per pair up to float64 rounding. Tiny negative results
    from that rounding are clamped to zero.
    """
    pa = _floor_normalize(np.asarray(a, dtype=np.float64), epsilon)
    pb = _floor_normalize(np.asarray(b, dtype=np.float64), epsilon)
    log_a = np.log(pa)
    log_b = np.log(pb)
    self_a = np.einsum("nd,nd->n", pa, log_a)
    self_b = np.einsum("md,md->m", pb, log_b)
    cross = pa @ log_b.T + log_a @ pb.T
    dist = 0.5 * (self_a[:, None] + self_b[None, :] - cross)
    return np.maximum(dist, 0.0)


def _mean_of(maps: np.ndarray) -> np.ndarray:
    merged = maps.mean(axis=0)
    return merged / merged.sum()


def merge_first_pass(
    af: AggregatedTensor, anchors: np.ndarray, params: MergeParams
) -> ProposalSet:
    """One proposal per anchor: the mean of all fused maps within tau of it.

    Distances are computed against every map in the R^2 grid; the anchor's own
    map always participates (its distance is zero). Contributing grid indices
    are recorded in ascending order as provenance.
    """
    if len(anchors) == 0:
        raise ValueError("anchor list must be non-empty")
    r = af.target
    grid_maps = af.maps().astype(np.float64)
    anchor_rows = np.asarray(anchors, dtype=np.float64).reshape(len(anchors), -1)
    dist = pairwise_kl_matrix(anchor_rows, grid_maps, params.epsilon)

    picked = dist < params.threshold  # (anchors, R^2); the anchor's own map qualifies
    counts = picked.sum(axis=1)
    # anchors sampled from the grid always include themselves (D = 0); synthetic
    # anchors (e.g. relevance-weighted) may match nothing, so fall back to the
    # nearest grid map to keep every proposal a mean of real maps
    empty = counts == 0
    if empty.any():
        nearest = np.argmin(dist[empty], axis=1)
        picked[np.nonzero(empty)[0], nearest] = True
        counts = picked.sum(axis=1)
    sums = picked.astype(np.float64) @ grid_maps  # group sums in one pass
    means = sums / counts[:, None]
    means /= means.sum(axis=1, keepdims=True)

    proposals = []
    for k in range(len(anchor_rows)):
        proposals.append(
            Proposal(
                map=means[k].reshape(r, r),
                members=int(counts[k]),
                provenance=tuple(np.nonzero(picked[k])[0].tolist()),
            )
        )
    return ProposalSet(proposals=tuple(proposals), params=params)


def merge_refine(pset: ProposalSet, params: MergeParams | None = None) -> ProposalSet:
    """Merge proposals with each other for up to ``iterations - 1`` rounds.

    Each round scans in index order: the current proposal absorbs every later
    unabsorbed proposal within tau of it (distances from the round-start maps),
    the group is replaced by its element-wise mean (renormalized, provenance
    concatenated, members summed), and output order preserves first-seen
    order. Rounds stop early once nothing merges. The first merging pass
    counts as iteration one, so ``iterations=1`` returns the input unchanged.
    """
    params = pset.params if params is None else params
    proposals = list(pset.proposals)
    for _ in range(params.iterations - 1):
        if len(proposals) <= 1:
            break
        rows = np.stack([p.map.ravel() for p in proposals])
        dist = pairwise_kl_matrix(rows, rows, params.epsilon)
        merged_any = False
        out: list[Proposal] = []
        absorbed = np.zeros(len(proposals), dtype=bool)
        for i in range(len(proposals)):
            if absorbed[i]:
                continue
            absorbed[i] = True
            group = [i]
            for j in range(i + 1, len(proposals)):
                if not absorbed[j] and dist[i, j] < params.threshold:
                    absorbed[j] = True
                    group.append(j)
            if len(group) == 1:
                out.append(proposals[i])
                continue
            merged_any = True
            members = [proposals[g] for g in group]
            stacked = np.stack([m.map for m in members])
            if params.member_weighted:
                counts = np.asarray([m.members for m in members], dtype=np.float64)
                merged = (stacked * counts[:, None, None]).sum(axis=0) / counts.sum()
                merged = merged / merged.sum()
            else:
                merged = _mean_of(stacked)
            provenance: tuple[int, ...] = ()
            for m in members:
                provenance += m.provenance
            out.append(
                Proposal(
                    map=merged,
                    members=sum(m.members for m in members),
                    provenance=provenance,
                )
            )
        proposals = out
        if not merged_any:
            break
    return ProposalSet(proposals=tuple(proposals), params=params)


def merge_proposals(af: AggregatedTensor, params: MergeParams) -> ProposalSet:
    """Full merging stage: sample anchors, first pass, then refinement rounds."""
    anchors = sample_anchors(af, params.grid)
    return merge_refine(merge_first_pass(af, anchors, params))
