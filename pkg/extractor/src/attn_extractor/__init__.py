"""Attention capture sidecar: diffusion model in, ATNP archive out.

The engine consuming these archives lives in a separate package and never
links torch; the contract between the two is the ATNP byte format plus the
``extract`` command line. Two backends exist: the stable-diffusion capture
(requires the optional diffusers/transformers extra and local model weights)
and a small deterministic synthetic transformer used for tests and offline
development.
"""

__version__ = "0.1.0"

from .capture import CaptureResult, head_reduce, reshape_self_attention
from .request import ExtractionRequest

__all__ = ["CaptureResult", "ExtractionRequest", "head_reduce", "reshape_self_attention"]
