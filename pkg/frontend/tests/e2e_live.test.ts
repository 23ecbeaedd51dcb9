/**
 * Live end-to-end loop against the real segmentation service: two prompts on
 * one capture, run switching, confidence toggle, region selection, mask
 * download, and a metrics panel that matches the CLI evaluator on the
 * downloaded mask. Skips itself when the python service is not installed.
 */
import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { PromptStudio } from "../src/session.js";

const PYTHON = process.env.ATTNMASK_PYTHON ?? "python3";

const available =
  spawnSync(PYTHON, ["-c", "import attnmask"], { timeout: 30_000 }).status === 0;

const FIXTURE_SCRIPT = `
import sys, numpy as np
from attnmask.archive import write_archive_file
from attnmask.synthetic import structured_stack, zone_layout
from attnmask.masking import BinaryMask
from attnmask.pngio import write_binary_mask_png
rng = np.random.default_rng(314)
stack = structured_stack({4: 2, 2: 1}, rng, zones=2, tokens=("<|s|>", "left", "right"))
write_archive_file(stack, sys.argv[1])
gt = BinaryMask(width=16, height=16, bits=zone_layout(16, 2) == 0)
write_binary_mask_png(gt, sys.argv[2])
`;

describe.skipIf(!available)("live service loop", () => {
  const workDir = mkdtempSync(join(tmpdir(), "attnmask-e2e-"));
  const port = 18000 + Math.floor(Math.random() * 10_000);
  const base = `http://127.0.0.1:${port}`;
  let service: ReturnType<typeof spawn> | null = null;
  let archiveBytes: Buffer;
  let gtBytes: Buffer;

  beforeAll(async () => {
    const archivePath = join(workDir, "capture.atnp");
    const gtPath = join(workDir, "gt.png");
    const fixture = spawnSync(PYTHON, ["-c", FIXTURE_SCRIPT, archivePath, gtPath], {
      timeout: 120_000,
    });
    if (fixture.status !== 0) {
      throw new Error(`fixture generation failed: ${fixture.stderr}`);
    }
    archiveBytes = readFileSync(archivePath);
    gtBytes = readFileSync(gtPath);

    const configPath = join(workDir, "config.json");
    writeFileSync(
      configPath,
      JSON.stringify({ target: 4, grid: 2, tau: 0.5, iters: 2, out_width: 16, out_height: 16 }),
    );
    service = spawn(
      PYTHON,
      ["-m", "attnmask.service", "--runs", join(workDir, "runs"),
       "--port", String(port), "--config", configPath],
      { stdio: "ignore" },
    );
    const deadline = Date.now() + 60_000;
    for (;;) {
      try {
        const response = await fetch(`${base}/api/health`);
        if (response.ok) break;
      } catch {
        // not up yet
      }
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }, 120_000);

  afterAll(() => {
    service?.kill();
  });

  it("prompt, switch, toggle, select, download, and metrics agree with the CLI", async () => {
    const client = new ServiceClient(base);
    const studio = new PromptStudio(client, { initialMs: 100, maxMs: 500 });
    const blob = () => new Blob([new Uint8Array(archiveBytes)]);
    const gtBlob = () => new Blob([new Uint8Array(gtBytes)]);

    const first = await studio.submitPrompt({
      prompt: "a detailed photograph highlighting the left side",
      archive: blob(),
      gt: gtBlob(),
    });
    const second = await studio.submitPrompt({
      prompt: "inflamed tissue on the right side",
      archive: blob(),
      gt: gtBlob(),
    });
    expect(first.record?.state).toBe("done");
    expect(second.record?.state).toBe("done");
    expect(first.runId).not.toBe(second.runId);
    expect(studio.history).toHaveLength(2);

    // switch between the two runs (the side-by-side comparison loop)
    studio.switchRun(first.runId);
    expect(studio.displayedArtifactUrl()).toContain(first.runId);

    // confidence toggle swaps the displayed artifact and serves real bytes
    studio.toggleConfidence();
    const confidenceUrl = studio.displayedArtifactUrl();
    expect(confidenceUrl).toContain("confidence");
    const confidencePng = await client.fetchArtifactBytes(confidenceUrl!);
    expect(confidencePng.size).toBeGreaterThan(0);
    studio.toggleConfidence();

    // select a region; the run carries a GT so metrics come back
    const label = first.record?.labels_present?.[0];
    expect(label).toBeDefined();
    const selection = await studio.clickRegion(label!);
    expect(selection).not.toBeNull();
    const panel = studio.metricsPanel();
    expect(panel).not.toBeNull();

    // download the binary selection mask
    const maskUrl = studio.downloadMaskUrl();
    expect(maskUrl).not.toBeNull();
    const maskBlob = await client.fetchArtifactBytes(maskUrl!);
    const maskBytes = Buffer.from(await maskBlob.arrayBuffer());
    expect(maskBytes.subarray(0, 4).toString("latin1")).toBe("\x89PNG");

    // CLI eval on the downloaded mask must reproduce the panel numbers
    const predDir = join(workDir, "pred");
    const gtDir = join(workDir, "gt-eval");
    mkdirSync(predDir, { recursive: true });
    mkdirSync(gtDir, { recursive: true });
    writeFileSync(join(predDir, "a.png"), maskBytes);
    writeFileSync(join(gtDir, "a.png"), gtBytes);
    const evalRun = spawnSync(
      PYTHON,
      ["-m", "attnmask.cli", "eval", "--pred", predDir, "--gt", gtDir,
       "--out", join(workDir, "eval-out")],
      { timeout: 120_000 },
    );
    expect(evalRun.status).toBe(0);
    const report = JSON.parse(
      readFileSync(join(workDir, "eval-out", "report.json"), "utf-8"),
    ) as { per_image: Array<{ metrics: { dsc: number; iou: number } }> };
    const cli = report.per_image[0]!.metrics;
    expect(Math.abs(cli.dsc - panel!.dsc)).toBeLessThan(1e-9);
    expect(Math.abs(cli.iou - panel!.iou)).toBeLessThan(1e-9);
  }, 120_000);
});
