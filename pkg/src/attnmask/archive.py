"""ATNP v1: a bit-exact binary container for attention stacks.

Layout (all integers little-endian)::

    magic "ATNP" | version u16 = 1 | record_count u32 | records...

    record := name_len u16 | name UTF-8 | dtype u8 | ndim u8
              | dims ndim x u32 | payload

Record names are ``self/NN`` and ``cross/NN`` (NN = layer index) plus one
mandatory ``meta`` record. dtype 1 is float32 little-endian, row-major;
dtype 2 is UTF-8 JSON (used only by ``meta``, written with ndim=1 and
dims=(payload byte count,)). The ``meta`` JSON object has keys ``model_id``,
``timestep``, ``prompt``, ``tokens``, ``image_source``, ``latent_size``.

Writing the same stack twice yields identical bytes (JSON keys are sorted,
float payloads are raw array bytes), and a read of a written archive
reproduces the stack bit-exactly.
"""
from __future__ import annotations

import io
import json
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from .errors import (
    ArchiveError,
    BadMagicError,
    DimensionMismatchError,
    StackValidationError,
    TruncatedRecordError,
    UnsupportedVersionError,
)
from .stack import (
    AttentionStack,
    AttentionTensor,
    CaptureMetadata,
    CrossAttentionTensor,
    Resolution,
    validate_stack,
)

MAGIC = b"ATNP"
VERSION = 1
DTYPE_F32 = 1
DTYPE_JSON = 2

_U16 = np.dtype("<u2")
_U32 = np.dtype("<u4")
_F32 = np.dtype("<f4")


def _meta_to_json(meta: CaptureMetadata) -> bytes:
    obj = {
        "model_id": meta.model_id,
        "timestep": meta.timestep,
        "prompt": meta.prompt,
        "tokens": list(meta.token_strings),
        "image_source": meta.image_source,
        "latent_size": meta.latent_size,
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _meta_from_json(payload: bytes) -> CaptureMetadata:
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArchiveError(f"meta record is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ArchiveError("meta record must hold a JSON object")
    try:
        return CaptureMetadata(
            model_id=str(obj["model_id"]),
            timestep=int(obj["timestep"]),
            prompt=str(obj["prompt"]),
            token_strings=tuple(str(t) for t in obj["tokens"]),
            image_source=str(obj["image_source"]),
            latent_size=int(obj["latent_size"]),
        )
    except KeyError as exc:
        raise ArchiveError(f"meta record missing key {exc}") from exc


def _write_record(sink: BinaryIO, name: str, dtype: int, dims: tuple[int, ...], payload: bytes) -> int:
    name_bytes = name.encode("utf-8")
    header = (
        np.uint16(len(name_bytes)).tobytes()
        + name_bytes
        + bytes([dtype, len(dims)])
        + np.asarray(dims, dtype=_U32).tobytes()
    )
    sink.write(header)
    sink.write(payload)
    return len(header) + len(payload)


def write_archive(stack: AttentionStack, destination: BinaryIO) -> int:
    """Serialize a validated stack; returns the number of bytes written.

    Raises :class:`StackValidationError` (naming the offending layer) when the
    stack violates its invariants, so no invalid archive is ever produced.
    """
    violations = validate_stack(stack)
    if violations:
        raise StackValidationError(violations)

    records = len(stack.self_attention) + (
        len(stack.cross_attention) if stack.cross_attention is not None else 0
    ) + 1
    destination.write(MAGIC)
    destination.write(np.uint16(VERSION).tobytes())
    destination.write(np.uint32(records).tobytes())
    written = len(MAGIC) + 2 + 4

    for tensor in stack.self_attention:
        payload = tensor.data.astype(_F32, copy=False).tobytes(order="C")
        written += _write_record(
            destination, f"self/{tensor.layer_index:02d}", DTYPE_F32, tensor.data.shape, payload
        )
    if stack.cross_attention is not None:
        for cross in stack.cross_attention:
            payload = cross.data.astype(_F32, copy=False).tobytes(order="C")
            written += _write_record(
                destination, f"cross/{cross.layer_index:02d}", DTYPE_F32, cross.data.shape, payload
            )
    meta_payload = _meta_to_json(stack.metadata)
    written += _write_record(destination, "meta", DTYPE_JSON, (len(meta_payload),), meta_payload)
    return written


def _read_exact(source: BinaryIO, n: int, what: str) -> bytes:
    buf = source.read(n)
    if len(buf) != n:
        raise TruncatedRecordError(
            f"truncated record: expected {n} byte(s) for {what}, got {len(buf)}"
        )
    return buf


def read_archive(source: BinaryIO) -> AttentionStack:
    """Parse and validate an ATNP v1 stream into an :class:`AttentionStack`.

    Malformed input is rejected deterministically: bad magic, unsupported
    version, truncated records, and dims inconsistent with a record's role all
    raise their dedicated :mod:`attnmask.errors` class; probability-invariant
    violations raise :class:`StackValidationError`.
    """
    magic = source.read(len(MAGIC))
    if magic != MAGIC:
        raise BadMagicError(f"bad magic: expected {MAGIC!r}, got {magic!r}")
    version = int(np.frombuffer(_read_exact(source, 2, "version"), dtype=_U16)[0])
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported archive version {version} (reader speaks {VERSION})")
    record_count = int(np.frombuffer(_read_exact(source, 4, "record count"), dtype=_U32)[0])

    self_records: list[AttentionTensor] = []
    cross_records: list[CrossAttentionTensor] = []
    metadata: CaptureMetadata | None = None
    seen_names: set[str] = set()

    for _ in range(record_count):
        name_len = int(np.frombuffer(_read_exact(source, 2, "name length"), dtype=_U16)[0])
        name = _read_exact(source, name_len, "record name").decode("utf-8")
        if name in seen_names:
            raise ArchiveError(f"duplicate record name {name!r}")
        seen_names.add(name)
        dtype, ndim = _read_exact(source, 2, f"{name} dtype/ndim")
        dims = tuple(
            int(d) for d in np.frombuffer(_read_exact(source, 4 * ndim, f"{name} dims"), dtype=_U32)
        )

        if name == "meta":
            if dtype != DTYPE_JSON or ndim != 1:
                raise DimensionMismatchError(
                    f"meta record must be dtype {DTYPE_JSON} with ndim 1, got dtype {dtype} ndim {ndim}"
                )
            metadata = _meta_from_json(_read_exact(source, dims[0], "meta payload"))
            continue

        if dtype != DTYPE_F32:
            raise ArchiveError(f"record {name!r}: unsupported dtype {dtype}")
        n_values = 1
        for d in dims:
            n_values *= d
        payload = _read_exact(source, 4 * n_values, f"{name} payload ({n_values} float32 values)")
        data = np.frombuffer(payload, dtype=_F32).reshape(dims)

        if name.startswith("self/"):
            if ndim != 4 or len(set(dims)) != 1:
                raise DimensionMismatchError(
                    f"record {name!r}: self-attention dims must be (s, s, s, s), got {dims}"
                )
            self_records.append(
                AttentionTensor(
                    layer_index=_layer_index(name),
                    resolution=Resolution(dims[0]),
                    data=data,
                )
            )
        elif name.startswith("cross/"):
            if ndim != 3 or dims[0] != dims[1]:
                raise DimensionMismatchError(
                    f"record {name!r}: cross-attention dims must be (s, s, T), got {dims}"
                )
            cross_records.append(
                CrossAttentionTensor(
                    layer_index=_layer_index(name),
                    resolution=Resolution(dims[0]),
                    token_count=dims[2],
                    data=data,
                )
            )
        else:
            raise ArchiveError(f"unrecognized record name {name!r}")

    if metadata is None:
        raise ArchiveError("archive has no meta record")
    trailing = source.read(1)
    if trailing:
        raise ArchiveError("trailing data after final record")
    if not self_records:
        raise ArchiveError("archive holds no self-attention records")

    stack = AttentionStack(
        self_attention=tuple(self_records),
        cross_attention=tuple(cross_records) if cross_records else None,
        metadata=metadata,
    )
    violations = validate_stack(stack)
    if violations:
        raise StackValidationError(violations)
    return stack


def _layer_index(name: str) -> int:
    suffix = name.split("/", 1)[1]
    try:
        return int(suffix)
    except ValueError as exc:
        raise ArchiveError(f"record name {name!r} has no numeric layer index") from exc


def write_archive_file(stack: AttentionStack, path: Union[str, Path]) -> int:
    with open(path, "wb") as sink:
        return write_archive(stack, sink)


def read_archive_file(path: Union[str, Path]) -> AttentionStack:
    with open(path, "rb") as source:
        return read_archive(source)


def archive_bytes(stack: AttentionStack) -> bytes:
    buf = io.BytesIO()
    write_archive(stack, buf)
    return buf.getvalue()
