"""
Driving the HTTP service
========================

Spins the service app in-process, submits an archive with a prompt, polls the
run to completion, clicks a region (via the selection endpoint), and fetches
the resulting binary mask — the same loop the web client performs.
"""
import io
import time

import numpy as np
from fastapi.testclient import TestClient
from PIL import Image

from attnmask.archive import archive_bytes
from attnmask.merging import MergeParams
from attnmask.pipeline import RunConfig
from attnmask.service import create_app
from attnmask.synthetic import structured_stack, zone_layout

rng = np.random.default_rng(5)
stack = structured_stack({8: 3}, rng, zones=2, tokens=("<|s|>", "left", "right"))
blob = archive_bytes(stack)

config = RunConfig(
    target=8, merge=MergeParams(grid=4, threshold=1.0, iterations=3),
    out_width=64, out_height=64,
)
app = create_app("/tmp/demo_service_runs", default_config=config)

gt_bits = zone_layout(64, 2) == 0
gt_buf = io.BytesIO()
Image.fromarray(np.where(gt_bits, 255, 0).astype(np.uint8), mode="L").save(gt_buf, format="PNG")

with TestClient(app) as client:
    print("health:", client.get("/api/health").json())

    response = client.post(
        "/api/runs",
        files={
            "archive": ("capture.atnp", blob, "application/octet-stream"),
            "gt": ("gt.png", gt_buf.getvalue(), "image/png"),
        },
        data={"prompt": "left side"},
    )
    run_id = response.json()["run_id"]
    print("submitted:", run_id, "->", response.status_code)

    while True:
        record = client.get(f"/api/runs/{run_id}").json()
        print("  state:", record["state"])
        if record["state"] in ("done", "failed"):
            break
        time.sleep(0.1)

    print("artifact links:")
    for name, url in record["artifacts"].items():
        print(f"  {name}: {url}")

    label = record["labels_present"][0]
    picked = client.post(f"/api/runs/{run_id}/selection", json={"labels": [label]}).json()
    print(f"selected label {label}; mask at {picked['mask_url']}")
    print("metrics vs the attached ground truth:", picked["metrics"])

    mask_bytes = client.get(picked["mask_url"]).content
    print(f"downloaded mask: {len(mask_bytes)} bytes (PNG: {mask_bytes[:4]!r})")
