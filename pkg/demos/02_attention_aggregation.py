"""
Fusing multi-resolution attention into one tensor
=================================================

Each attention layer holds one 2-D probability map per grid location. Layers
live at different resolutions (8x8 up to 64x64 in real captures); fusion
upsamples every map to the target grid, weights layers proportionally to
their resolution, and renormalizes so each fused map is again a distribution.
"""
import numpy as np

from attnmask.aggregation import aggregate_stack, compute_weights
from attnmask.stack import AttentionStack, AttentionTensor, Resolution

# hand-built two-layer stack: a coarse 1x1 layer (sees everything uniformly)
# and a sharp 2x2 layer where every location attends only to itself
coarse = AttentionTensor(0, Resolution(1), np.ones((1, 1, 1, 1), dtype=np.float32))
sharp_data = np.zeros((2, 2, 2, 2), dtype=np.float32)
for i in range(2):
    for j in range(2):
        sharp_data[i, j, i, j] = 1.0
sharp = AttentionTensor(1, Resolution(2), sharp_data)
stack = AttentionStack(self_attention=(coarse, sharp))

weights = compute_weights(stack.resolutions, "proportional")
print("resolution-proportional weights:", weights.weights)  # (1/3, 2/3)

fused = aggregate_stack(stack, weights, target=2)
print("fused map at location (0, 0):")
print(fused.data[0, 0])
print("sums:", fused.data.sum(axis=(2, 3)))  # every map sums to 1

# the sharp layer dominates its own location, the coarse layer spreads mass:
# [[0.5, 1/6], [1/6, 1/6]] at (0,0) — exactly the weighted, renormalized blend
expected = np.array([[0.5, 1 / 6], [1 / 6, 1 / 6]])
print("matches the hand computation:", np.allclose(fused.data[0, 0], expected, atol=1e-7))

# uniform weighting is available for ablation
uniform = compute_weights(stack.resolutions, "uniform")
fused_u = aggregate_stack(stack, uniform, target=2)
print("uniform-weight map at (0, 0):")
print(fused_u.data[0, 0])
