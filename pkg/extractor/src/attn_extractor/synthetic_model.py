"""Deterministic stand-in diffusion backbone for offline capture.

A tiny transformer-style tower with genuine softmax attention at the same
grid resolutions the real model exposes (64, 32, 16, 8 for a 512x512 input,
census {64:5, 32:5, 16:5, 8:1}). Projection weights are derived from a fixed
generator, features come from the actual image pixels, and prompts go through
a whitespace tokenizer with hash-derived embeddings — so captures respond to
their inputs, stay bit-stable across runs, and exercise every piece of the
capture plumbing without model weights or a download.
"""
from __future__ import annotations

import hashlib

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .capture import CaptureResult
from .request import ExtractionRequest, SCHEDULE_STEPS

WORKING_SIDE = 512
LATENT_SIDE = 64
CENSUS = ((64, 5), (32, 5), (16, 5), (8, 1))
HEADS = 4
CHANNELS = 16
SHARPNESS = 16.0  # keeps within-object rows near-identical, across-object far apart

START_TOKEN = "<|startoftext|>"
END_TOKEN = "<|endoftext|>"


def tokenize(prompt: str) -> tuple[str, ...]:
    words = tuple(w for w in prompt.split() if w)
    return (START_TOKEN,) + words + (END_TOKEN,)


def _token_embedding(token: str, dim: int) -> torch.Tensor:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "little")
    gen = torch.Generator().manual_seed(seed)
    return torch.randn(dim, generator=gen, dtype=torch.float64)


def load_image_tensor(path) -> torch.Tensor:
    """Image file -> (3, 512, 512) float64 tensor in [0, 1]."""
    img = Image.open(path).convert("RGB").resize(
        (WORKING_SIDE, WORKING_SIDE), Image.Resampling.BILINEAR
    )
    arr = np.asarray(img, dtype=np.float64) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1)


def forward_noise(latent: torch.Tensor, timestep: int, seed: int) -> torch.Tensor:
    """Blend in schedule-scaled Gaussian noise at the given timestep.

    Uses the scaled-linear beta schedule (0.00085 -> 0.012 over 1000 steps);
    the noise generator is seeded, so the flag stays deterministic.
    """
    betas = (
        torch.linspace(0.00085**0.5, 0.012**0.5, SCHEDULE_STEPS, dtype=torch.float64) ** 2
    )
    alpha_bar = torch.cumprod(1.0 - betas, dim=0)[timestep - 1]
    gen = torch.Generator().manual_seed(seed)
    noise = torch.randn(latent.shape, generator=gen, dtype=torch.float64)
    return alpha_bar.sqrt() * latent + (1.0 - alpha_bar).sqrt() * noise


class SyntheticBackbone:
    """Fixed-weight feature tower + attention layers with capture hooks."""

    model_id = "synthetic"

    def __init__(self, seed: int = 0):
        gen = torch.Generator().manual_seed(seed)

        def weight(rows: int, cols: int) -> torch.Tensor:
            return torch.randn(rows, cols, generator=gen, dtype=torch.float64) / cols**0.5

        self.patch_proj = weight(CHANNELS, 3 * 8 * 8)
        self.layer_weights = []
        for side, count in CENSUS:
            for _ in range(count):
                self.layer_weights.append(
                    (side, weight(CHANNELS * HEADS, CHANNELS), weight(CHANNELS * HEADS, CHANNELS))
                )
        self.cross_q = weight(CHANNELS * HEADS, CHANNELS)
        self.cross_k = weight(CHANNELS * HEADS, CHANNELS)

    def encode(self, image: torch.Tensor) -> torch.Tensor:
        """(3, 512, 512) -> (CHANNELS, 64, 64) latent via fixed 8x8 patches."""
        patches = F.unfold(image.unsqueeze(0), kernel_size=8, stride=8)[0]  # (192, 4096)
        latent = (self.patch_proj @ patches).reshape(CHANNELS, LATENT_SIDE, LATENT_SIDE)
        return latent / (latent.std() + 1e-8)

    @staticmethod
    def _grid_features(latent: torch.Tensor, side: int) -> torch.Tensor:
        pooled = F.adaptive_avg_pool2d(latent.unsqueeze(0), side)[0]  # (C, side, side)
        return pooled.reshape(CHANNELS, side * side).T  # (side^2, C)

    @staticmethod
    def _attention(q_proj, k_proj, q_feat, k_feat) -> torch.Tensor:
        """Multi-head softmax attention probabilities (heads, q_len, k_len).

        float32 throughout: the 64x64 grids mean (4096, 4096) score matrices,
        and float64 GEMMs would dominate capture time for no contract benefit
        (archives store float32 anyway).
        """
        q = (q_feat.to(torch.float32) @ q_proj.T.to(torch.float32))
        q = q.reshape(len(q_feat), HEADS, CHANNELS).permute(1, 0, 2)
        k = (k_feat.to(torch.float32) @ k_proj.T.to(torch.float32))
        k = k.reshape(len(k_feat), HEADS, CHANNELS).permute(1, 0, 2)
        scores = q @ k.transpose(1, 2) * (SHARPNESS / CHANNELS**0.5)
        return torch.softmax(scores, dim=-1)

    def run(self, request: ExtractionRequest) -> CaptureResult:
        image = load_image_tensor(request.image)
        latent = self.encode(image)
        if request.add_noise:
            latent = forward_noise(latent, request.timestep, request.seed)
        # the timestep conditions the features, mirroring how the real U-Net
        # sees a timestep embedding; keep it simple but deterministic
        latent = latent * (1.0 + request.timestep / SCHEDULE_STEPS)

        tokens = tokenize(request.prompt) if request.prompt else ()
        token_feats = (
            torch.stack([_token_embedding(t, CHANNELS) for t in tokens]) if tokens else None
        )

        result = CaptureResult(
            tokens=tokens, model_id=self.model_id, latent_size=LATENT_SIDE
        )
        for side, q_proj, k_proj in self.layer_weights:
            feats = self._grid_features(latent, side)
            probs = self._attention(q_proj, k_proj, feats, feats)
            result.add_self(probs.numpy(), request.head_mode)
            if token_feats is not None:
                cross = self._attention(self.cross_q, self.cross_k, feats, token_feats)
                result.add_cross(cross.numpy(), request.head_mode)
        return result
