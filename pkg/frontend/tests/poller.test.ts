import { describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { pollRun } from "../src/poller.js";
import { MockService } from "./mock_service.js";

describe("pollRun", () => {
  it("polls until done and applies exponential backoff to the 10s ceiling", async () => {
    const service = new MockService();
    const runId = service.addRun({
      pendingStates: ["queued", "extracting", "segmenting", "segmenting", "segmenting", "segmenting"],
    });
    const client = new ServiceClient("", service.fetch);
    const sleeps: number[] = [];
    const seen: string[] = [];
    const record = await pollRun(client, runId, {
      sleep: async (ms) => {
        sleeps.push(ms);
      },
      onUpdate: (r) => seen.push(r.state),
    });
    expect(record.state).toBe("done");
    expect(sleeps).toEqual([1000, 2000, 4000, 8000, 10000, 10000]);
    expect(seen[0]).toBe("queued");
    expect(seen.at(-1)).toBe("done");
  });

  it("resolves failed runs as terminal", async () => {
    const service = new MockService();
    const runId = service.addRun({ fail: "extractor exploded", pendingStates: ["queued"] });
    const client = new ServiceClient("", service.fetch);
    const record = await pollRun(client, runId, { sleep: async () => {} });
    expect(record.state).toBe("failed");
    expect(record.error).toBe("extractor exploded");
  });

  it("propagates lookup errors", async () => {
    const client = new ServiceClient("", new MockService().fetch);
    await expect(pollRun(client, "ghost", { sleep: async () => {} })).rejects.toMatchObject({
      status: 404,
    });
  });
});
