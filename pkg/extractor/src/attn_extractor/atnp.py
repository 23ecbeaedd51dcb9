"""Minimal ATNP v1 writer.

Implements the archive byte format this sidecar shares with the segmentation
engine: magic "ATNP", version u16=1, record count u32, then length-prefixed
records (name, dtype, dims, payload), all little-endian. Self-attention
records are named ``self/NN`` with dims (s, s, s, s), cross-attention
``cross/NN`` with dims (s, s, T), and the mandatory ``meta`` record holds a
canonical-JSON object (keys model_id, timestep, prompt, tokens, image_source,
latent_size). Payloads are raw row-major float32, so identical tensors always
produce identical bytes.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"ATNP"
VERSION = 1
DTYPE_F32 = 1
DTYPE_JSON = 2


def _record(name: str, dtype: int, dims: Sequence[int], payload: bytes) -> bytes:
    name_bytes = name.encode("utf-8")
    head = struct.pack("<H", len(name_bytes)) + name_bytes + bytes([dtype, len(dims)])
    head += b"".join(struct.pack("<I", d) for d in dims)
    return head + payload


def write_archive(
    path: Path | str,
    self_tensors: Sequence[np.ndarray],
    cross_tensors: Sequence[np.ndarray],
    metadata: dict,
) -> int:
    """Write one archive; tensors must already be float32-representable.

    ``self_tensors[k]`` has shape (s, s, s, s) and ``cross_tensors[k]``
    (s, s, T); layer index = position in the sequence. Returns bytes written.
    """
    records = []
    for layer, tensor in enumerate(self_tensors):
        arr = np.ascontiguousarray(tensor, dtype="<f4")
        if arr.ndim != 4 or len(set(arr.shape)) != 1:
            raise ValueError(f"self tensor {layer}: expected (s, s, s, s), got {arr.shape}")
        records.append(_record(f"self/{layer:02d}", DTYPE_F32, arr.shape, arr.tobytes(order="C")))
    for layer, tensor in enumerate(cross_tensors):
        arr = np.ascontiguousarray(tensor, dtype="<f4")
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"cross tensor {layer}: expected (s, s, T), got {arr.shape}")
        records.append(_record(f"cross/{layer:02d}", DTYPE_F32, arr.shape, arr.tobytes(order="C")))

    meta_payload = json.dumps(
        {
            "model_id": str(metadata["model_id"]),
            "timestep": int(metadata["timestep"]),
            "prompt": str(metadata["prompt"]),
            "tokens": [str(t) for t in metadata["tokens"]],
            "image_source": str(metadata["image_source"]),
            "latent_size": int(metadata["latent_size"]),
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    ).encode("utf-8")
    records.append(_record("meta", DTYPE_JSON, (len(meta_payload),), meta_payload))

    blob = MAGIC + struct.pack("<H", VERSION) + struct.pack("<I", len(records)) + b"".join(records)
    Path(path).write_bytes(blob)
    return len(blob)
