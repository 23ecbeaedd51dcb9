"""
Prompt-guided region ranking
============================

When a capture ran with a prompt, each layer also records cross-attention
from grid locations to prompt tokens. Summing the selected tokens' slices,
upsampling, and weighting like the self-attention fusion yields a relevance
distribution over the grid; regions are then ranked by mean relevance and
can be picked automatically.
"""
import numpy as np

from attnmask.aggregation import aggregate_stack, compute_weights
from attnmask.guidance import (
    auto_select,
    build_relevance_map,
    default_token_selection,
    score_regions,
)
from attnmask.masking import nms_mask
from attnmask.merging import MergeParams, merge_proposals
from attnmask.synthetic import structured_stack

rng = np.random.default_rng(3)

# two zones; the prompt token "lesion" is wired to the left zone (token 1),
# "skin" to the right (token 2); token 0 is the special start marker
tokens = ("<|startoftext|>", "lesion", "skin")
stack = structured_stack({8: 3}, rng, zones=2, tokens=tokens, zone_token={0: 1, 1: 2})

weights = compute_weights(stack.resolutions)
fused = aggregate_stack(stack, weights, target=8)
proposals = merge_proposals(fused, MergeParams(grid=4, threshold=1.0, iterations=3))
mask, confidence = nms_mask(proposals, 64, 64)

selection = default_token_selection(stack.metadata)
print("default token selection skips specials:", selection.strings)

# ask only for "lesion": relevance should concentrate on the left half
from attnmask.guidance import TokenSelection

lesion = TokenSelection((1,), ("lesion",))
relevance = build_relevance_map(stack, weights, 8, lesion)
left_mass = relevance.values[:, :4].sum()
print(f"relevance mass on the left half: {left_mass:.3f} (of 1.0)")

scores = score_regions(mask, relevance)
print("regions ranked by mean relevance:")
for label, score in scores:
    print(f"  label {label}: {score:.6f}")

print("top1 pick:", auto_select(scores, "top1"))
print("ratio 0.5 pick:", auto_select(scores, "ratio", ratio=0.5))

# asking for "skin" instead flips the ranking
skin = TokenSelection((2,), ("skin",))
flipped = score_regions(mask, build_relevance_map(stack, weights, 8, skin))
print("with the other token, top1 becomes:", auto_select(flipped, "top1"))
