"""HTTP facade over the pipeline for interactive clients.

Endpoints (JSON UTF-8; errors shaped as ``{"error": ..., "field"?: ...}``):

    POST /api/runs                      multipart: image|archive (file) or
                                        archive_path (text), prompt, params
                                        (JSON text), optional gt mask file
                                        -> 202 {"run_id": ...}
    GET  /api/runs/{id}                 -> run record + artifact links
    GET  /api/runs/{id}/artifacts/{n}   -> artifact bytes
    POST /api/runs/{id}/selection       {"labels": [...]} -> mask url + metrics
    GET  /api/health                    -> {"status": "ok"}

Runs execute asynchronously on a small worker pool; clients poll. States move
strictly forward (queued -> extracting -> segmenting -> done | failed) and
every transition is appended to a per-run log. Artifact URLs carry content
hashes so they are safe to cache. Two identical submissions get two distinct
run ids; content-addressed caching lives below, in the pipeline layer.

Multipart bodies are parsed with the stdlib email parser rather than a form
library, keeping the wire contract dependency-free.
"""
from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from email.parser import BytesParser
from email.policy import HTTP
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from .errors import AttnMaskError, ConfigError, UnknownLabelError
from .masking import BinaryMask, select_regions
from .metrics import compute_metrics, confusion_counts
from .pipeline import RunConfig, file_digest, run_pipeline
from .pngio import read_binary_mask_png, read_label_mask_png, write_binary_mask_png
from .resample import resize_binary_bilinear

DEFAULT_MAX_UPLOAD = 16 * 1024 * 1024

RUN_STATES = ("queued", "extracting", "segmenting", "done", "failed")


class RunRecord:
    """Mutable run state; transitions are guarded, atomic, and logged."""

    def __init__(self, run_id: str, config: RunConfig):
        self.run_id = run_id
        self.config = config
        self.state = "queued"
        self.error: Optional[str] = None
        self.artifacts: dict[str, Path] = {}
        self.gt_path: Optional[Path] = None
        self.state_log: list[str] = ["queued"]
        self._lock = threading.Lock()

    def advance(self, new_state: str, error: Optional[str] = None) -> None:
        with self._lock:
            if RUN_STATES.index(new_state) <= RUN_STATES.index(self.state):
                raise RuntimeError(f"illegal transition {self.state} -> {new_state}")
            self.state = new_state
            self.state_log.append(new_state)
            if error is not None:
                self.error = error

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "run_id": self.run_id,
                "state": self.state,
                "error": self.error,
                "config": self.config.to_dict(),
                "state_log": list(self.state_log),
            }


def _parse_multipart(content_type: str, body: bytes) -> dict[str, tuple[Optional[str], bytes]]:
    """Parse multipart/form-data into {field name: (filename | None, bytes)}."""
    if "multipart/form-data" not in content_type:
        raise ConfigError("expected a multipart/form-data body")
    envelope = b"Content-Type: " + content_type.encode("utf-8") + b"\r\n\r\n" + body
    message = BytesParser(policy=HTTP).parsebytes(envelope)
    if not message.is_multipart():
        raise ConfigError("multipart body could not be parsed")
    fields: dict[str, tuple[Optional[str], bytes]] = {}
    for part in message.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if not name:
            continue
        filename = part.get_filename()
        payload = part.get_payload(decode=True) or b""
        fields[str(name)] = (filename, payload)
    return fields


def _artifact_url(run_id: str, name: str, path: Path) -> str:
    digest = file_digest(path)[:16]
    return f"/api/runs/{run_id}/artifacts/{name}?v={digest}"


def create_app(
    runs_dir: Path | str,
    default_config: RunConfig | None = None,
    max_upload: int = DEFAULT_MAX_UPLOAD,
    workers: int = 2,
) -> FastAPI:
    runs_root = Path(runs_dir)
    runs_root.mkdir(parents=True, exist_ok=True)
    base_config = default_config if default_config is not None else RunConfig()

    app = FastAPI(title="attnmask service")
    registry: dict[str, RunRecord] = {}
    registry_lock = threading.Lock()
    pool = ThreadPoolExecutor(max_workers=workers)
    counter = {"next": len(list(runs_root.glob("run-*"))) + 1}

    def error_response(status: int, message: str, field: Optional[str] = None) -> JSONResponse:
        payload = {"error": message}
        if field:
            payload["field"] = field
        return JSONResponse(payload, status_code=status)

    @app.exception_handler(AttnMaskError)
    async def _handle_domain_error(_request, exc: AttnMaskError):
        field = getattr(exc, "field", None)
        return error_response(400, str(exc), field)

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    def _execute(record: RunRecord, input_path: Path, run_dir: Path) -> None:
        try:
            manifest = run_pipeline(
                record.config, input_path, run_dir,
                gt_path=record.gt_path if record.gt_path else None,
                on_stage=record.advance,
            )
            with record._lock:
                record.artifacts = {
                    name: run_dir / rel for name, rel in manifest.artifacts.items()
                }
            record.advance("done")
        except Exception as exc:  # failure is a terminal state, not a crash
            try:
                record.advance("failed", error=str(exc))
            except RuntimeError:
                pass

    @app.post("/api/runs", status_code=202)
    async def create_run(request: Request):
        body = await request.body()
        if len(body) > max_upload:
            return error_response(413, f"upload exceeds {max_upload} bytes")
        try:
            fields = _parse_multipart(request.headers.get("content-type", ""), body)
        except ConfigError as exc:
            return error_response(400, str(exc))

        params: dict = {}
        if "params" in fields:
            try:
                params = json.loads(fields["params"][1].decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                return error_response(400, f"params is not valid JSON: {exc}", field="params")
        if "prompt" in fields:
            params["prompt"] = fields["prompt"][1].decode("utf-8")
        merged = {**base_config.to_dict(), **params}
        try:
            config = RunConfig.from_dict(merged)
        except ConfigError as exc:
            return error_response(400, str(exc), field=exc.field)

        with registry_lock:
            seq = counter["next"]
            counter["next"] += 1
        content_tag = hashlib.sha256(body).hexdigest()[:8]
        run_id = f"run-{seq:06d}-{content_tag}"
        run_dir = runs_root / run_id
        run_dir.mkdir(parents=True, exist_ok=True)

        if "archive" in fields and fields["archive"][1]:
            input_path = run_dir / "input.atnp"
            input_path.write_bytes(fields["archive"][1])
        elif "image" in fields and fields["image"][1]:
            filename = fields["image"][0] or "input.png"
            suffix = Path(filename).suffix.lower() or ".png"
            input_path = run_dir / f"input{suffix}"
            input_path.write_bytes(fields["image"][1])
        elif "archive_path" in fields:
            input_path = Path(fields["archive_path"][1].decode("utf-8"))
            if not input_path.exists():
                return error_response(400, f"archive reference not found: {input_path}", "archive_path")
        else:
            return error_response(400, "request needs an image, archive, or archive_path", "image")

        record = RunRecord(run_id, config)
        if "gt" in fields and fields["gt"][1]:
            gt_path = run_dir / "gt.png"
            gt_path.write_bytes(fields["gt"][1])
            record.gt_path = gt_path

        with registry_lock:
            registry[run_id] = record
        pool.submit(_execute, record, input_path, run_dir)
        return {"run_id": run_id}

    def _get_record(run_id: str) -> Optional[RunRecord]:
        with registry_lock:
            return registry.get(run_id)

    @app.get("/api/runs/{run_id}")
    async def get_run(run_id: str):
        record = _get_record(run_id)
        if record is None:
            return error_response(404, f"unknown run id {run_id!r}")
        payload = record.snapshot()
        if payload["state"] == "done":
            payload["artifacts"] = {
                name: _artifact_url(run_id, name, path)
                for name, path in sorted(record.artifacts.items())
            }
            label_mask_path = record.artifacts.get("label_mask")
            if label_mask_path is not None:
                mask = read_label_mask_png(label_mask_path)
                payload["labels_present"] = mask.present_labels()
        return payload

    @app.get("/api/runs/{run_id}/artifacts/{name}")
    async def get_artifact(run_id: str, name: str):
        record = _get_record(run_id)
        if record is None:
            return error_response(404, f"unknown run id {run_id!r}")
        path = record.artifacts.get(name)
        if path is None or not path.exists():
            return error_response(404, f"unknown artifact {name!r}")
        media = "image/png" if path.suffix == ".png" else "application/octet-stream"
        if path.suffix == ".json":
            media = "application/json"
        return FileResponse(path, media_type=media)

    @app.post("/api/runs/{run_id}/selection")
    async def post_selection(run_id: str, request: Request):
        record = _get_record(run_id)
        if record is None:
            return error_response(404, f"unknown run id {run_id!r}")
        if record.state != "done":
            return error_response(409, f"run is {record.state}, not done")
        try:
            payload = json.loads(await request.body())
            labels = payload["labels"]
        except (json.JSONDecodeError, KeyError, TypeError):
            return error_response(400, 'body must be JSON like {"labels": [0, 2]}', "labels")
        if not isinstance(labels, list) or not all(isinstance(v, int) for v in labels):
            return error_response(422, "labels must be a list of integers", "labels")

        mask = read_label_mask_png(record.artifacts["label_mask"])
        try:
            selection = select_regions(mask, set(labels))
        except UnknownLabelError as exc:
            return error_response(422, str(exc), "labels")

        tag = hashlib.sha256(json.dumps(sorted(labels)).encode()).hexdigest()[:12]
        name = f"selection_{tag}"
        run_dir = record.artifacts["label_mask"].parent
        out_path = run_dir / f"{name}.png"
        write_binary_mask_png(selection, out_path)
        with record._lock:
            record.artifacts[name] = out_path

        response: dict = {"mask_url": _artifact_url(run_id, name, out_path)}
        if record.gt_path is not None:
            gt = read_binary_mask_png(record.gt_path)
            pred_bits = resize_binary_bilinear(selection.bits, gt.height, gt.width)
            pred = BinaryMask(width=gt.width, height=gt.height, bits=pred_bits)
            response["metrics"] = compute_metrics(confusion_counts(pred, gt)).as_dict()
        return response

    return app


def main(argv: list[str] | None = None) -> int:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="Serve the segmentation HTTP API.")
    parser.add_argument("--runs", default="service-runs", help="directory for run artifacts")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8008)
    parser.add_argument("--config", default=None, help="JSON file with default run config")
    args = parser.parse_args(argv)

    default_config = None
    if args.config:
        from .pipeline import load_config

        default_config = load_config(args.config)
    app = create_app(args.runs, default_config=default_config)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
