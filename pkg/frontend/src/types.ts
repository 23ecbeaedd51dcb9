/** Wire types mirroring the segmentation service's JSON responses. */

export type RunState = "queued" | "extracting" | "segmenting" | "done" | "failed";

export interface RunRecord {
  run_id: string;
  state: RunState;
  error: string | null;
  config: Record<string, unknown>;
  state_log: string[];
  /** present only in the done state */
  artifacts?: Record<string, string>;
  labels_present?: number[];
}

export interface RegionStats {
  id: number;
  area: number;
  bbox: [number, number, number, number];
  mean_confidence: number;
}

export interface ScoreEntry {
  label: number;
  score: number;
}

export interface Metrics {
  dsc: number;
  iou: number;
  precision: number;
  recall: number;
  degenerate?: boolean;
}

export interface SelectionResponse {
  mask_url: string;
  metrics?: Metrics;
}

export type OverlayMode = "mask" | "confidence" | "boundary";
