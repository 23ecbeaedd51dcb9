"""PNG serialization for masks, confidence maps, and overlays.

Binary masks are 8-bit grayscale with 0 = background and 255 = selected
(read back as value > 127). Label masks store the label value per pixel in an
8-bit channel, which caps supported proposals at 256 labels; their JSON
sidecar maps each label to region stats. Confidence is quantized to 8-bit by
rounding value * 255. PNG bytes are deterministic for identical inputs.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Union

import numpy as np
from PIL import Image

from .masking import BinaryMask, ConfidenceMap, LabelMask, Region

PathLike = Union[str, Path]


def write_binary_mask_png(mask: BinaryMask, path: PathLike) -> None:
    Image.fromarray(np.where(mask.bits, 255, 0).astype(np.uint8), mode="L").save(path, format="PNG")


def read_binary_mask_png(path: PathLike) -> BinaryMask:
    arr = np.asarray(Image.open(path).convert("L"))
    return BinaryMask(width=arr.shape[1], height=arr.shape[0], bits=arr > 127)


def write_label_mask_png(mask: LabelMask, path: PathLike) -> None:
    if mask.num_labels > 256:
        raise ValueError(f"8-bit label PNG supports at most 256 labels, got {mask.num_labels}")
    Image.fromarray(mask.labels.astype(np.uint8), mode="L").save(path, format="PNG")


def read_label_mask_png(path: PathLike, num_labels: int | None = None) -> LabelMask:
    arr = np.asarray(Image.open(path).convert("L")).astype(np.int32)
    n = int(arr.max()) + 1 if num_labels is None else num_labels
    return LabelMask(width=arr.shape[1], height=arr.shape[0], labels=arr, num_labels=n)


def write_confidence_png(conf: ConfidenceMap, path: PathLike) -> None:
    quantized = np.rint(conf.values * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="L").save(path, format="PNG")


def write_rgb_png(image: np.ndarray, path: PathLike) -> None:
    arr = np.asarray(image, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) uint8, got shape {arr.shape}")
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def read_image_rgb(path: PathLike) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"))


def region_sidecar(regions: Iterable[Region]) -> dict:
    """JSON-ready mapping of label id -> region stats for the PNG sidecar."""
    return {str(r.id): asdict(r) for r in regions}


def write_region_sidecar(regions: Iterable[Region], path: PathLike) -> None:
    Path(path).write_text(
        json.dumps(region_sidecar(regions), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
