"""Pixel-wise segmentation metrics and dataset-level aggregation.

The four scores are computed from confusion counts with exact rational
arithmetic and converted to float percentages only at the end:

    DSC       = 2*TP / (2*TP + FP + FN) * 100
    IoU       =   TP / (TP + FP + FN)   * 100
    precision =   TP / (TP + FP)        * 100
    recall    =   TP / (TP + FN)        * 100

The empty-vs-empty case (TP = FP = FN = 0) is defined as 100 across the board
and flagged "degenerate" so dataset aggregates stay honest. When only one side
is empty, the affected ratio (0/0 precision or recall) scores 0. Dataset
aggregation reports the per-image mean, the per-image median (lower middle for
even counts), and a pooled-confusion "micro" variant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .masking import BinaryMask

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    """Pixel tallies; tp + fp + fn + tn equals the image pixel count."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass(frozen=True)
class MetricReport:
    """DSC/IoU/precision/recall as percentages in [0, 100]."""

    dsc: float
    iou: float
    precision: float
    recall: float
    degenerate: bool = False

    def as_dict(self) -> dict:
        d = {
            "dsc": self.dsc,
            "iou": self.iou,
            "precision": self.precision,
            "recall": self.recall,
        }
        if self.degenerate:
            d["degenerate"] = True
        return d


@dataclass(frozen=True)
class ImageResult:
    """One evaluated image: id, its report, and the selection that produced it."""

    image_id: str
    report: MetricReport
    selection: tuple[int, ...] = ()


@dataclass(frozen=True)
class DatasetEvalResult:
    """Per-image reports plus mean / median / pooled-micro aggregates."""

    per_image: tuple[ImageResult, ...]
    aggregate_mean: MetricReport
    aggregate_median: MetricReport
    aggregate_micro: MetricReport
    selection_mode: str = "fixed"


def confusion_counts(pred: BinaryMask, gt: BinaryMask) -> ConfusionCounts:
    """Pixel-wise confusion tally; dims must agree."""
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValueError(
            f"dimension mismatch: pred ({pred.height}, {pred.width}) vs gt ({gt.height}, {gt.width})"
        )
    p = pred.bits
    g = gt.bits
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = p.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def compute_metrics(c: ConfusionCounts) -> MetricReport:
    """Exact-rational metric percentages from one confusion tally."""
    if c.tp == 0 and c.fp == 0 and c.fn == 0:
        return MetricReport(dsc=100.0, iou=100.0, precision=100.0, recall=100.0, degenerate=True)

    def ratio(num: int, den: int) -> float:
        if den == 0:
            return 0.0
        return float(Fraction(num, den) * 100)

    return MetricReport(
        dsc=ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        iou=ratio(c.tp, c.tp + c.fp + c.fn),
        precision=ratio(c.tp, c.tp + c.fp),
        recall=ratio(c.tp, c.tp + c.fn),
    )


def median_lower(values: Sequence[float]) -> float:
    """Median with the lower of the two middles for even counts."""
    if not values:
        raise ValueError("median of empty sequence")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def _aggregate(reports: Sequence[MetricReport], reduce_fn) -> MetricReport:
    return MetricReport(
        dsc=reduce_fn([r.dsc for r in reports]),
        iou=reduce_fn([r.iou for r in reports]),
        precision=reduce_fn([r.precision for r in reports]),
        recall=reduce_fn([r.recall for r in reports]),
        degenerate=any(r.degenerate for r in reports),
    )


def _mean(values: Sequence[float]) -> float:
    # fsum keeps aggregates exactly permutation-invariant
    return math.fsum(values) / len(values)


def evaluate_dataset(
    pairs: Iterable[tuple[BinaryMask, BinaryMask, str]],
    selection_mode: str = "fixed",
    selections: dict[str, tuple[int, ...]] | None = None,
) -> DatasetEvalResult:
    """Evaluate (pred, gt, image id) pairs and aggregate.

    Mean is the arithmetic mean of per-image percentages, median uses the
    lower-middle rule, and micro recomputes the metrics from pooled confusion
    counts. Aggregates are invariant to pair order. A dimension mismatch names
    the offending image id.
    """
    per_image: list[ImageResult] = []
    pooled = ConfusionCounts(0, 0, 0, 0)
    for pred, gt, image_id in pairs:
        try:
            counts = confusion_counts(pred, gt)
        except ValueError as exc:
            raise ValueError(f"image {image_id!r}: {exc}") from exc
        pooled = pooled + counts
        selection = tuple((selections or {}).get(image_id, ()))
        per_image.append(
            ImageResult(image_id=image_id, report=compute_metrics(counts), selection=selection)
        )
    if not per_image:
        raise ValueError("no (pred, gt) pairs to evaluate")
    per_image.sort(key=lambda item: item.image_id)
    reports = [item.report for item in per_image]
    return DatasetEvalResult(
        per_image=tuple(per_image),
        aggregate_mean=_aggregate(reports, _mean),
        aggregate_median=_aggregate(reports, median_lower),
        aggregate_micro=compute_metrics(pooled),
        selection_mode=selection_mode,
    )


def report_json(result: DatasetEvalResult, config: dict | None = None) -> dict:
    """Machine-readable report: per_image[], mean{}, median{}, micro{}, config{}."""
    return {
        "per_image": [
            {
                "id": item.image_id,
                "metrics": item.report.as_dict(),
                "selection": list(item.selection),
            }
            for item in result.per_image
        ],
        "mean": result.aggregate_mean.as_dict(),
        "median": result.aggregate_median.as_dict(),
        "micro": result.aggregate_micro.as_dict(),
        "selection_mode": result.selection_mode,
        "config": config or {},
    }


def report_table(result: DatasetEvalResult) -> str:
    """Plain-text table of per-image and aggregate scores.

    Column order is IoU, Precision, Recall, DSC.
    """
    header = f"{'Image':<24}{'IoU (%)':>10}{'Precision (%)':>15}{'Recall (%)':>13}{'DSC (%)':>10}"
    lines = [header, "-" * len(header)]

    def row(name: str, r: MetricReport) -> str:
        flag = " *" if r.degenerate else ""
        return (
            f"{name:<24}{r.iou:>10.2f}{r.precision:>15.2f}{r.recall:>13.2f}{r.dsc:>10.2f}{flag}"
        )

    for item in result.per_image:
        lines.append(row(item.image_id, item.report))
    lines.append("-" * len(header))
    lines.append(row("mean", result.aggregate_mean))
    lines.append(row("median", result.aggregate_median))
    lines.append(row("micro (pooled)", result.aggregate_micro))
    if any(item.report.degenerate for item in result.per_image):
        lines.append("* degenerate: empty ground truth and empty prediction")
    return "\n".join(lines)
