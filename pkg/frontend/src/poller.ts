/**
 * Poll a run until it reaches a terminal state (done | failed).
 *
 * Runs are long (extraction can take minutes), so polling starts at 1 s and
 * backs off exponentially to a 10 s ceiling. The sleep function is injectable
 * for tests; at most one poll loop should exist per run.
 */
import type { ServiceClient } from "./api.js";
import type { RunRecord } from "./types.js";

export interface PollOptions {
  initialMs?: number;
  maxMs?: number;
  factor?: number;
  onUpdate?: (record: RunRecord) => void;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function pollRun(
  client: ServiceClient,
  runId: string,
  options: PollOptions = {},
): Promise<RunRecord> {
  const initial = options.initialMs ?? 1000;
  const max = options.maxMs ?? 10_000;
  const factor = options.factor ?? 2;
  const sleep = options.sleep ?? defaultSleep;

  let interval = initial;
  for (;;) {
    const record = await client.getRun(runId);
    options.onUpdate?.(record);
    if (record.state === "done" || record.state === "failed") {
      return record;
    }
    await sleep(interval);
    interval = Math.min(interval * factor, max);
  }
}
