"""Attention capture from a pretrained stable-diffusion checkpoint.

Loads the pipeline via diffusers, encodes the (512x512-resized) image with the
VAE, embeds the prompt (or the unconditioned empty embedding), and runs the
U-Net once at the requested timestep with capture processors installed on
every attention module: ``attn1`` probabilities land as self-attention,
``attn2`` as cross-attention, both post-softmax and reduced over heads.
Forward-process noise at the timestep is off by default (the clean latent is
used) and seeded when enabled.

diffusers/transformers are an optional extra; importing this module without
them raises a clear error and nothing else in the package cares.
"""
from __future__ import annotations

import torch

from .capture import CaptureResult
from .request import ExtractionRequest
from .synthetic_model import forward_noise, load_image_tensor


class BackendUnavailable(RuntimeError):
    pass


def _import_diffusers():
    try:
        from diffusers import StableDiffusionPipeline  # noqa: PLC0415
    except ImportError as exc:
        raise BackendUnavailable(
            "the stable-diffusion backend needs the optional [sd] extra "
            "(diffusers + transformers) and local model weights"
        ) from exc
    return StableDiffusionPipeline


class _CaptureProcessor:
    """Attention processor that records post-softmax probabilities."""

    def __init__(self, store: list, name: str):
        self.store = store
        self.name = name

    def __call__(self, attn, hidden_states, encoder_hidden_states=None,
                 attention_mask=None, **kwargs):
        residual = hidden_states
        batch, seq_len, _ = hidden_states.shape
        query = attn.to_q(hidden_states)
        context = hidden_states if encoder_hidden_states is None else encoder_hidden_states
        if encoder_hidden_states is not None and attn.norm_cross:
            context = attn.norm_encoder_hidden_states(context)
        key = attn.to_k(context)
        value = attn.to_v(context)

        query = attn.head_to_batch_dim(query)
        key = attn.head_to_batch_dim(key)
        value = attn.head_to_batch_dim(value)
        probs = attn.get_attention_scores(query, key, attention_mask)

        kind = "cross" if encoder_hidden_states is not None else "self"
        self.store.append((self.name, kind, probs.detach().to(torch.float64).cpu().numpy()))

        hidden_states = torch.bmm(probs, value)
        hidden_states = attn.batch_to_head_dim(hidden_states)
        hidden_states = attn.to_out[0](hidden_states)
        hidden_states = attn.to_out[1](hidden_states)
        if attn.residual_connection:
            hidden_states = hidden_states + residual
        return hidden_states / attn.rescale_output_factor


def run(request: ExtractionRequest, device: str = "cpu") -> CaptureResult:
    StableDiffusionPipeline = _import_diffusers()
    pipe = StableDiffusionPipeline.from_pretrained(
        request.model, torch_dtype=torch.float32, safety_checker=None
    )
    pipe = pipe.to(device)

    image = load_image_tensor(request.image).to(torch.float32) * 2.0 - 1.0  # [-1, 1]
    with torch.no_grad():
        posterior = pipe.vae.encode(image.unsqueeze(0)).latent_dist
        latent = posterior.mean * pipe.vae.config.scaling_factor

    if request.add_noise:
        latent = forward_noise(
            latent.to(torch.float64), request.timestep, request.seed
        ).to(torch.float32)

    tokens: tuple[str, ...] = ()
    if request.prompt:
        encoded = pipe.tokenizer(
            request.prompt,
            padding="max_length",
            max_length=pipe.tokenizer.model_max_length,
            truncation=True,
            return_tensors="pt",
        )
        tokens = tuple(
            pipe.tokenizer.convert_ids_to_tokens(encoded.input_ids[0].tolist())
        )
        with torch.no_grad():
            embedding = pipe.text_encoder(encoded.input_ids.to(device))[0]
    else:
        unconditioned = pipe.tokenizer(
            "", padding="max_length", max_length=pipe.tokenizer.model_max_length,
            return_tensors="pt",
        )
        with torch.no_grad():
            embedding = pipe.text_encoder(unconditioned.input_ids.to(device))[0]

    store: list = []
    for name, module in pipe.unet.named_modules():
        if name.endswith(("attn1", "attn2")):
            module.set_processor(_CaptureProcessor(store, name))

    with torch.no_grad():
        pipe.unet(
            latent,
            torch.tensor([request.timestep], device=device),
            encoder_hidden_states=embedding,
        )

    result = CaptureResult(
        tokens=tokens if request.prompt else (),
        model_id=request.model,
        latent_size=int(latent.shape[-1]),
    )
    for _name, kind, probs in store:
        # probs is (batch*heads, q, k) with batch 1 -> (heads, q, k)
        if kind == "self":
            result.add_self(probs, request.head_mode)
        elif request.prompt:
            result.add_cross(probs, request.head_mode)
    return result
