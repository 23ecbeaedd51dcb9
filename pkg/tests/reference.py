"""Independent reference implementations used as oracles by the test suite.

Everything here is deliberately written the slow, obvious way (per-pixel
loops, per-pair distance tables, scipy primitives) and shares no code with
the engine's vectorized paths beyond the public dtype contracts.
"""
from __future__ import annotations

import numpy as np
from scipy.special import rel_entr


def naive_resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Per-pixel evaluation of half-pixel-center bilinear resampling."""
    a = np.asarray(arr, dtype=np.float64)
    src_h, src_w = a.shape
    out = np.zeros((out_h, out_w), dtype=np.float64)
    for dy in range(out_h):
        sy = min(max((dy + 0.5) * src_h / out_h - 0.5, 0.0), src_h - 1.0)
        y0 = int(np.floor(sy))
        y0 = min(y0, src_h - 1)
        fy = sy - y0
        y1 = min(y0 + 1, src_h - 1)
        for dx in range(out_w):
            sx = min(max((dx + 0.5) * src_w / out_w - 0.5, 0.0), src_w - 1.0)
            x0 = int(np.floor(sx))
            x0 = min(x0, src_w - 1)
            fx = sx - x0
            x1 = min(x0 + 1, src_w - 1)
            top = (1.0 - fx) * a[y0, x0] + fx * a[y0, x1]
            bottom = (1.0 - fx) * a[y1, x0] + fx * a[y1, x1]
            out[dy, dx] = (1.0 - fy) * top + fy * bottom
    return out


def brute_force_aggregate(stack, weights: list[float], target: int) -> np.ndarray:
    """Direct per-location evaluation of the weighted multi-resolution sum.

    For every target location (I, J) and layer k: upsample that layer's map at
    (I // delta, J // delta) on its own, scale by the layer weight, sum, then
    renormalize. Returns float32, matching the engine's output contract.
    """
    acc = np.zeros((target, target, target, target), dtype=np.float64)
    for tensor, weight in zip(stack.self_attention, weights):
        side = tensor.resolution.side
        delta = target // side
        for big_i in range(target):
            for big_j in range(target):
                src = tensor.data[big_i // delta, big_j // delta].astype(np.float64)
                acc[big_i, big_j] += weight * naive_resize_bilinear(src, target, target)
    for big_i in range(target):
        for big_j in range(target):
            acc[big_i, big_j] /= acc[big_i, big_j].sum()
    return acc.astype(np.float32)


def reference_kl(p: np.ndarray, q: np.ndarray, epsilon: float) -> float:
    """Symmetric KL via scipy's rel_entr after epsilon flooring."""
    pf = np.maximum(np.asarray(p, dtype=np.float64).ravel(), epsilon)
    pf = pf / pf.sum()
    qf = np.maximum(np.asarray(q, dtype=np.float64).ravel(), epsilon)
    qf = qf / qf.sum()
    return 0.5 * (rel_entr(pf, qf).sum() + rel_entr(qf, pf).sum())


def reference_merge(
    af_data: np.ndarray, grid: int, tau: float, iterations: int, epsilon: float
) -> list[dict]:
    """Exhaustive-table reimplementation of the whole merging stage.

    Returns a list of {"map", "members", "provenance"} dicts. Anchor
    coordinates, grouping order, and averaging mirror the documented rules but
    are recomputed from scratch with per-pair distances.
    """
    side = af_data.shape[0]
    flat = af_data.reshape(side * side, side * side).astype(np.float64)

    ticks = [int((m + 0.5) * side / grid) for m in range(grid)]
    anchor_flat = [i * side + j for i in ticks for j in ticks]

    proposals = []
    for a in anchor_flat:
        picked = [g for g in range(side * side) if reference_kl(flat[a], flat[g], epsilon) < tau]
        merged = flat[picked].mean(axis=0)
        merged = merged / merged.sum()
        proposals.append({"map": merged, "members": len(picked), "provenance": list(picked)})

    for _ in range(iterations - 1):
        if len(proposals) <= 1:
            break
        n = len(proposals)
        table = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                table[i, j] = reference_kl(proposals[i]["map"], proposals[j]["map"], epsilon)
        taken = [False] * n
        merged_any = False
        out = []
        for i in range(n):
            if taken[i]:
                continue
            taken[i] = True
            group = [i]
            for j in range(i + 1, n):
                if not taken[j] and table[i, j] < tau:
                    taken[j] = True
                    group.append(j)
            if len(group) == 1:
                out.append(proposals[i])
                continue
            merged_any = True
            stacked = np.stack([proposals[g]["map"] for g in group])
            merged = stacked.mean(axis=0)
            merged = merged / merged.sum()
            provenance = []
            for g in group:
                provenance.extend(proposals[g]["provenance"])
            out.append(
                {
                    "map": merged,
                    "members": sum(proposals[g]["members"] for g in group),
                    "provenance": provenance,
                }
            )
        proposals = out
        if not merged_any:
            break
    for p in proposals:
        p["map"] = p["map"].reshape(side, side)
    return proposals
