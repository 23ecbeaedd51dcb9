"""
Segmentation metrics and dataset aggregation
============================================

Confusion counts feed four percentage metrics computed with exact rational
arithmetic. Dataset aggregation reports per-image rows, the mean, the
lower-middle median, and a pooled-confusion "micro" variant.
"""
import numpy as np

from attnmask.masking import BinaryMask
from attnmask.metrics import (
    ConfusionCounts,
    compute_metrics,
    confusion_counts,
    evaluate_dataset,
    report_table,
)


def mask(bits):
    arr = np.asarray(bits, dtype=bool)
    return BinaryMask(width=arr.shape[1], height=arr.shape[0], bits=arr)


# the classic worked example: TP=2 FP=2 FN=2
report = compute_metrics(ConfusionCounts(tp=2, fp=2, fn=2, tn=10))
print(f"TP=2 FP=2 FN=2 -> DSC {report.dsc:.2f}  IoU {report.iou:.2f}  "
      f"precision {report.precision:.2f}  recall {report.recall:.2f}")

# DSC and IoU are locked together: DSC = 2*IoU / (1 + IoU)
iou = report.iou / 100
print(f"identity check: 2*IoU/(1+IoU) = {200 * iou / (1 + iou):.2f} == DSC")

# empty-vs-empty scores 100 but is flagged so aggregates stay honest
degenerate = compute_metrics(ConfusionCounts(0, 0, 0, 64))
print("empty vs empty:", degenerate.as_dict())

gt = np.zeros((8, 8), dtype=bool)
gt[2:6, 2:6] = True
good = gt.copy()
shifted = np.roll(gt, 2, axis=1)
empty = np.zeros_like(gt)

result = evaluate_dataset(
    [
        (mask(good), mask(gt), "exact"),
        (mask(shifted), mask(gt), "shifted"),
        (mask(empty), mask(gt), "missed"),
    ]
)
print()
print(report_table(result))

counts = confusion_counts(mask(shifted), mask(gt))
print(f"\nshifted prediction counts: TP={counts.tp} FP={counts.fp} FN={counts.fn} TN={counts.tn}")
