"""Extraction request: what to capture, from which model, and where to put it."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

DEFAULT_MODEL = "CompVis/stable-diffusion-v1-4"
DEFAULT_TIMESTEP = 300
SCHEDULE_STEPS = 1000


@dataclass(frozen=True)
class ExtractionRequest:
    image: Path
    out: Path
    prompt: str = ""
    timestep: int = DEFAULT_TIMESTEP
    model: str = DEFAULT_MODEL
    add_noise: bool = False
    seed: int = 0
    head_mode: str = "mean"  # mean | sum (sum renormalizes rows afterwards)

    def __post_init__(self) -> None:
        if not 1 <= self.timestep <= SCHEDULE_STEPS:
            raise ValueError(
                f"timestep must lie in [1, {SCHEDULE_STEPS}], got {self.timestep}"
            )
        if self.head_mode not in ("mean", "sum"):
            raise ValueError(f"head_mode must be 'mean' or 'sum', got {self.head_mode!r}")
        object.__setattr__(self, "image", Path(self.image))
        object.__setattr__(self, "out", Path(self.out))
