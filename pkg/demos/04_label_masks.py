"""
From proposals to label masks, regions, and overlays
====================================================

Proposals are upsampled to the output raster and suppressed per pixel: each
pixel takes the proposal with the largest probability. The confidence map is
the per-pixel winning value scaled by the global maximum. Regions can then be
listed, selected into a binary mask, and traced onto an image.
"""
from pathlib import Path

import numpy as np

from attnmask.aggregation import aggregate_stack, compute_weights
from attnmask.masking import extract_regions, nms_mask, render_overlay, select_regions
from attnmask.merging import MergeParams, merge_proposals
from attnmask.pngio import (
    write_binary_mask_png,
    write_confidence_png,
    write_label_mask_png,
    write_region_sidecar,
    write_rgb_png,
)
from attnmask.synthetic import structured_stack

out_dir = Path("/tmp/demo_masks")
out_dir.mkdir(exist_ok=True)
rng = np.random.default_rng(2)

stack = structured_stack({8: 3, 4: 1}, rng, zones=4)
fused = aggregate_stack(stack, compute_weights(stack.resolutions), target=8)
proposals = merge_proposals(fused, MergeParams(grid=4, threshold=1.0, iterations=3))
print(f"{len(proposals)} proposals after merging")

mask, confidence = nms_mask(proposals, out_w=128, out_h=128)
print("labels present:", mask.present_labels())
print("confidence peaks at", float(confidence.values.max()), "(always 1 by construction)")

regions = extract_regions(mask, confidence)
for region in regions:
    print(f"  region {region.id}: {region.area} px, bbox {region.bbox}, "
          f"mean confidence {region.mean_confidence:.3f}")

# select the largest region into a binary mask
selection = select_regions(mask, {regions[0].id})
print(f"selected region {regions[0].id}: {int(selection.bits.sum())} px")

# trace boundaries on a flat gray canvas: prediction green, reference red
canvas = np.full((128, 128, 3), 90, dtype=np.uint8)
reference = select_regions(mask, {regions[0].id})  # pretend the GT matches
overlay = render_overlay(canvas, reference, selection)

write_label_mask_png(mask, out_dir / "label_mask.png")
write_region_sidecar(regions, out_dir / "regions.json")
write_confidence_png(confidence, out_dir / "confidence.png")
write_binary_mask_png(selection, out_dir / "selection.png")
write_rgb_png(overlay, out_dir / "overlay.png")
print("wrote", ", ".join(p.name for p in sorted(out_dir.iterdir())), "to", out_dir)
