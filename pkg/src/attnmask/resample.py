"""Separable bilinear resampling with a fixed half-pixel-center convention.

Every resize in this package maps destination index ``d`` to the source
coordinate ``s = (d + 0.5) * (src / dst) - 0.5`` clamped to ``[0, src - 1]``,
then interpolates linearly between ``floor(s)`` and ``floor(s) + 1``. The
convention is pinned (rather than delegated to an image library) because mask
bytes must be reproducible bit-for-bit across runs and implementations.
"""
from __future__ import annotations

import numpy as np


def bilinear_weight_matrix(src: int, dst: int) -> np.ndarray:
    """(dst, src) float64 matrix W with ``out = W @ values`` along one axis."""
    if src < 1 or dst < 1:
        raise ValueError(f"sizes must be >= 1, got src={src}, dst={dst}")
    w = np.zeros((dst, src), dtype=np.float64)
    coords = (np.arange(dst, dtype=np.float64) + 0.5) * (src / dst) - 0.5
    coords = np.clip(coords, 0.0, src - 1.0)
    lo = np.floor(coords).astype(np.int64)
    lo = np.minimum(lo, src - 1)
    frac = coords - lo
    hi = np.minimum(lo + 1, src - 1)
    rows = np.arange(dst)
    w[rows, lo] += 1.0 - frac
    w[rows, hi] += frac
    return w


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a 2-D array to (out_h, out_w); returns float64, no normalization."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {a.shape}")
    wh = bilinear_weight_matrix(a.shape[0], out_h)
    ww = bilinear_weight_matrix(a.shape[1], out_w)
    return wh @ a @ ww.T


def upsample_bilinear(map2d: np.ndarray, target: int) -> np.ndarray:
    """Upsample a 2-D map to (target, target); the target may not shrink it."""
    a = np.asarray(map2d)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D map, got shape {a.shape}")
    h, w = a.shape
    if target < h or target < w:
        raise ValueError(f"target {target} smaller than source ({h}, {w})")
    return resize_bilinear(a, target, target)


def resize_stack_bilinear(maps: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a (n, h, w) batch of 2-D maps in one pass; returns float64."""
    a = np.asarray(maps, dtype=np.float64)
    if a.ndim != 3:
        raise ValueError(f"expected (n, h, w), got shape {a.shape}")
    wh = bilinear_weight_matrix(a.shape[1], out_h)
    ww = bilinear_weight_matrix(a.shape[2], out_w)
    return np.matmul(np.matmul(wh, a), ww.T)


def resize_image_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize an (h, w) or (h, w, c) uint8 raster; rounds back to uint8."""
    img = np.asarray(image)
    if img.ndim == 2:
        out = resize_bilinear(img, out_h, out_w)
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    if img.ndim != 3:
        raise ValueError(f"expected (h, w) or (h, w, c), got shape {img.shape}")
    channels = [resize_bilinear(img[:, :, c], out_h, out_w) for c in range(img.shape[2])]
    out = np.stack(channels, axis=-1)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def resize_binary_bilinear(bits: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a boolean mask: interpolate the indicator, threshold at 0.5."""
    field = resize_bilinear(np.asarray(bits, dtype=np.float64), out_h, out_w)
    return field >= 0.5
