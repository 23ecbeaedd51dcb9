/**
 * Prompt-studio session state: prompt history, the active run, region
 * selection, and the overlay mode.
 *
 * The session holds no derived numbers of its own — every score, metric, and
 * label shown comes from service JSON, so reloading the page and re-fetching
 * the same run ids reproduces the identical view. Selections live per run
 * entry, which keeps "selected labels are labels of the active run" true by
 * construction when switching between prompts.
 */
import { ServiceClient, ServiceError } from "./api.js";
import { pollRun, type PollOptions } from "./poller.js";
import type {
  Metrics,
  OverlayMode,
  RegionStats,
  RunRecord,
  ScoreEntry,
  SelectionResponse,
} from "./types.js";

export interface RunEntry {
  prompt: string;
  runId: string;
  record: RunRecord | null;
  regions: RegionStats[];
  scores: ScoreEntry[];
  selected: Set<number>;
  selectionMaskUrl: string | null;
  metrics: Metrics | null;
}

export interface SubmitInput {
  prompt: string;
  archive?: Blob;
  image?: Blob;
  imageName?: string;
  gt?: Blob;
  params?: Record<string, unknown>;
}

export class PromptStudio {
  readonly history: RunEntry[] = [];
  activeRunId: string | null = null;
  overlayMode: OverlayMode = "mask";
  errorBanner: string | null = null;

  constructor(
    private readonly client: ServiceClient,
    private readonly pollOptions: PollOptions = {},
  ) {}

  get activeEntry(): RunEntry | null {
    return this.history.find((entry) => entry.runId === this.activeRunId) ?? null;
  }

  /** Submit a prompt, poll to a terminal state, and load region data. */
  async submitPrompt(input: SubmitInput): Promise<RunEntry> {
    this.errorBanner = null;
    let runId: string;
    try {
      runId = await this.client.createRun(input);
    } catch (error) {
      this.surface(error);
      throw error;
    }
    const entry: RunEntry = {
      prompt: input.prompt,
      runId,
      record: null,
      regions: [],
      scores: [],
      selected: new Set(),
      selectionMaskUrl: null,
      metrics: null,
    };
    this.history.push(entry);
    this.activeRunId = runId;

    try {
      entry.record = await pollRun(this.client, runId, this.pollOptions);
    } catch (error) {
      this.surface(error);
      throw error;
    }
    if (entry.record.state === "failed") {
      this.errorBanner = entry.record.error ?? "run failed";
      return entry;
    }
    await this.loadRunData(entry);
    return entry;
  }

  /** Re-hydrate an existing run id (page reload / shared link). */
  async openRun(prompt: string, runId: string): Promise<RunEntry> {
    const entry: RunEntry = {
      prompt,
      runId,
      record: null,
      regions: [],
      scores: [],
      selected: new Set(),
      selectionMaskUrl: null,
      metrics: null,
    };
    try {
      entry.record = await this.client.getRun(runId);
      if (entry.record.state === "done") {
        await this.loadRunData(entry);
      }
    } catch (error) {
      this.surface(error);
      throw error;
    }
    this.history.push(entry);
    this.activeRunId = runId;
    return entry;
  }

  private async loadRunData(entry: RunEntry): Promise<void> {
    const artifacts = entry.record?.artifacts ?? {};
    const regionsUrl = artifacts["regions"];
    if (regionsUrl) {
      const sidecar = await this.client.fetchJsonArtifact<Record<string, RegionStats>>(regionsUrl);
      entry.regions = Object.values(sidecar).sort((a, b) => b.area - a.area || a.id - b.id);
    }
    const scoresUrl = artifacts["scores"];
    if (scoresUrl) {
      entry.scores = await this.client.fetchJsonArtifact<ScoreEntry[]>(scoresUrl);
    }
  }

  switchRun(runId: string): RunEntry {
    const entry = this.history.find((item) => item.runId === runId);
    if (!entry) {
      throw new Error(`run ${runId} is not in this session's history`);
    }
    this.activeRunId = runId;
    return entry;
  }

  toggleConfidence(): OverlayMode {
    this.overlayMode = this.overlayMode === "confidence" ? "mask" : "confidence";
    return this.overlayMode;
  }

  setOverlayMode(mode: OverlayMode): void {
    this.overlayMode = mode;
  }

  /** Artifact URL the viewer should currently display. */
  displayedArtifactUrl(): string | null {
    const artifacts = this.activeEntry?.record?.artifacts;
    if (!artifacts) return null;
    if (this.overlayMode === "confidence") return artifacts["confidence"] ?? null;
    if (this.overlayMode === "boundary") {
      return artifacts["overlay"] ?? artifacts["label_mask"] ?? null;
    }
    return artifacts["label_mask"] ?? null;
  }

  /**
   * Toggle a region in the active run's selection and sync with the service.
   * Clicking a label that is not present (background / stale pixel) is a
   * no-op. Returns the updated selection response, or null for no-ops.
   */
  async clickRegion(label: number): Promise<SelectionResponse | null> {
    const entry = this.activeEntry;
    if (!entry || entry.record?.state !== "done") return null;
    const present = entry.record.labels_present ?? [];
    if (!present.includes(label)) return null;

    if (entry.selected.has(label)) {
      entry.selected.delete(label);
    } else {
      entry.selected.add(label);
    }
    try {
      const response = await this.client.postSelection(
        entry.runId,
        [...entry.selected].sort((a, b) => a - b),
      );
      entry.selectionMaskUrl = response.mask_url;
      entry.metrics = response.metrics ?? null;
      return response;
    } catch (error) {
      // roll the toggle back so view state matches the service
      if (entry.selected.has(label)) {
        entry.selected.delete(label);
      } else {
        entry.selected.add(label);
      }
      this.surface(error);
      throw error;
    }
  }

  /** URL of the downloadable binary mask for the active selection. */
  downloadMaskUrl(): string | null {
    return this.activeEntry?.selectionMaskUrl ?? null;
  }

  metricsPanel(): Metrics | null {
    return this.activeEntry?.metrics ?? null;
  }

  private surface(error: unknown): void {
    if (error instanceof ServiceError) {
      this.errorBanner = error.field ? `${error.message} (field: ${error.field})` : error.message;
    } else {
      this.errorBanner = error instanceof Error ? error.message : String(error);
    }
  }
}
