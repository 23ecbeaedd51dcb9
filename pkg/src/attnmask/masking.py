"""Label masks from proposals via per-pixel argmax, plus region utilities.

Proposals are upsampled to the output raster with the shared bilinear
convention; each pixel takes the index of the largest proposal value, ties
broken by the lowest index so the result is a total deterministic order.
Confidence is the per-pixel maximum normalized by the global maximum. Regions
are whole labels (a label may be spatially disconnected); optional
connected-component splitting is provided separately.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import UnknownLabelError
from .merging import ProposalSet
from .resample import resize_stack_bilinear

DEFAULT_OUTPUT_SIDE = 512


@dataclass(frozen=True)
class LabelMask:
    """Per-pixel proposal labels in [0, num_labels); (height, width) layout."""

    width: int
    height: int
    labels: np.ndarray
    num_labels: int

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.labels, dtype=np.int32)
        if arr.shape != (self.height, self.width):
            raise ValueError(f"labels shape {arr.shape} != (height {self.height}, width {self.width})")
        if arr.size and (arr.min() < 0 or arr.max() >= self.num_labels):
            raise ValueError(f"labels must lie in [0, {self.num_labels})")
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    def present_labels(self) -> list[int]:
        """Labels with at least one pixel; others were suppressed entirely."""
        return sorted(int(v) for v in np.unique(self.labels))

    def empty_labels(self) -> list[int]:
        present = set(self.present_labels())
        return [k for k in range(self.num_labels) if k not in present]


@dataclass(frozen=True)
class ConfidenceMap:
    """Per-pixel max proposal probability scaled to [0, 1] by the global max."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"confidence must be 2-D, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise ValueError("confidence values must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class Region:
    """Summary of one label: pixel area, bounding box, mean confidence."""

    id: int
    area: int
    bbox: tuple[int, int, int, int]  # (min_x, min_y, max_x, max_y), inclusive
    mean_confidence: float


@dataclass(frozen=True)
class BinaryMask:
    """Boolean selection mask with the same dims as its source LabelMask."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.bits, dtype=bool)
        if arr.shape != (self.height, self.width):
            raise ValueError(f"bits shape {arr.shape} != (height {self.height}, width {self.width})")
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)


def nms_mask(
    proposals: ProposalSet,
    out_w: int = DEFAULT_OUTPUT_SIDE,
    out_h: int = DEFAULT_OUTPUT_SIDE,
) -> tuple[LabelMask, ConfidenceMap]:
    """Per-pixel argmax over upsampled proposals -> (LabelMask, ConfidenceMap)."""
    if len(proposals) == 0:
        raise ValueError("proposal set is empty")
    side = proposals.proposals[0].map.shape[0]
    if out_w < side or out_h < side:
        raise ValueError(f"output dims ({out_w}, {out_h}) smaller than proposal side {side}")
    up = resize_stack_bilinear(proposals.stacked(), out_h, out_w)
    labels = np.argmax(up, axis=0).astype(np.int32)  # first max wins = lowest index
    peak = np.max(up, axis=0)
    global_max = float(peak.max())
    conf = peak / global_max if global_max > 0 else np.zeros_like(peak)
    return (
        LabelMask(width=out_w, height=out_h, labels=labels, num_labels=len(proposals)),
        ConfidenceMap(values=conf),
    )


def extract_regions(mask: LabelMask, confidence: ConfidenceMap) -> list[Region]:
    """One Region per non-empty label, sorted by area descending (ties: lower id)."""
    if confidence.values.shape != mask.labels.shape:
        raise ValueError("confidence dims do not match mask")
    labels = mask.labels
    areas = np.bincount(labels.ravel(), minlength=mask.num_labels)
    conf_sums = np.bincount(
        labels.ravel(), weights=confidence.values.ravel(), minlength=mask.num_labels
    )
    regions = []
    for label in range(mask.num_labels):
        if areas[label] == 0:
            continue
        ys, xs = np.nonzero(labels == label)
        regions.append(
            Region(
                id=label,
                area=int(areas[label]),
                bbox=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
                mean_confidence=float(conf_sums[label] / areas[label]),
            )
        )
    regions.sort(key=lambda r: (-r.area, r.id))
    return regions


def select_regions(mask: LabelMask, ids) -> BinaryMask:
    """Binary mask of pixels whose label is in ``ids`` (must all be present)."""
    wanted = {int(i) for i in ids}
    present = set(mask.present_labels())
    unknown = wanted - present
    if unknown:
        raise UnknownLabelError(unknown)
    bits = np.isin(mask.labels, sorted(wanted)) if wanted else np.zeros_like(mask.labels, dtype=bool)
    return BinaryMask(width=mask.width, height=mask.height, bits=bits)


def boundary_pixels(bits: np.ndarray) -> np.ndarray:
    """Mask pixels with a 4-neighbor outside the mask or on the image edge."""
    b = np.asarray(bits, dtype=bool)
    padded = np.pad(b, 1, mode="constant", constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return b & ~interior


def render_overlay(
    base_image: np.ndarray,
    gt: BinaryMask | None,
    pred: BinaryMask,
) -> np.ndarray:
    """Paint boundary tracings on a copy of the base raster.

    Ground-truth boundaries go pure red, predicted boundaries pure green;
    prediction is painted second so overlap reads green. Only boundary pixels
    change.
    """
    img = np.asarray(base_image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"base image must be (h, w, 3), got shape {img.shape}")
    if img.shape[:2] != (pred.height, pred.width):
        raise ValueError(
            f"prediction dims ({pred.height}, {pred.width}) do not match image {img.shape[:2]}"
        )
    if gt is not None and img.shape[:2] != (gt.height, gt.width):
        raise ValueError(
            f"ground-truth dims ({gt.height}, {gt.width}) do not match image {img.shape[:2]}"
        )
    out = img.astype(np.uint8, copy=True)
    if gt is not None:
        out[boundary_pixels(gt.bits)] = (255, 0, 0)
    out[boundary_pixels(pred.bits)] = (0, 255, 0)
    return out


def split_connected_components(mask: LabelMask) -> LabelMask:
    """Optional relabeling: split each label into 4-connected components.

    New labels are assigned by ascending source label, components ordered by
    scan order within it, keeping the result deterministic.
    """
    labels = mask.labels
    out = np.zeros_like(labels)
    next_label = 0
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    for label in range(mask.num_labels):
        where = labels == label
        if not where.any():
            continue
        comps, n = ndimage.label(where, structure=structure)
        for c in range(1, n + 1):
            out[comps == c] = next_label
            next_label += 1
    return LabelMask(width=mask.width, height=mask.height, labels=out, num_labels=max(next_label, 1))
