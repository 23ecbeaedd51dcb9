/**
 * Thin typed client for the segmentation service.
 *
 * All numbers shown in the UI come from these responses; the client never
 * recomputes masks or metrics. Service errors ({error, field?}) are surfaced
 * verbatim via ServiceError so the UI can display them unaltered.
 */
import type { RunRecord, SelectionResponse } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  readonly status: number;
  readonly field?: string;

  constructor(status: number, message: string, field?: string) {
    super(message);
    this.status = status;
    this.field = field;
  }
}

export interface CreateRunInput {
  prompt: string;
  /** pre-captured archive bytes, mutually exclusive with image */
  archive?: Blob;
  image?: Blob;
  imageName?: string;
  /** optional ground-truth mask PNG; enables the metrics panel */
  gt?: Blob;
  params?: Record<string, unknown>;
}

async function errorFrom(response: Response): Promise<ServiceError> {
  let message = `${response.status} ${response.statusText}`;
  let field: string | undefined;
  try {
    const body = (await response.json()) as { error?: string; field?: string };
    if (body.error) message = body.error;
    field = body.field;
  } catch {
    // non-JSON error body: keep the status line
  }
  return new ServiceError(response.status, message, field);
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async health(): Promise<{ status: string }> {
    return this.json(await this.fetchImpl(this.url("/api/health")));
  }

  async createRun(input: CreateRunInput): Promise<string> {
    const form = new FormData();
    form.append("prompt", input.prompt);
    if (input.params) {
      form.append("params", JSON.stringify(input.params));
    }
    if (input.archive) {
      form.append("archive", input.archive, "input.atnp");
    } else if (input.image) {
      form.append("image", input.image, input.imageName ?? "input.png");
    } else {
      throw new ServiceError(0, "submit needs an image or an archive");
    }
    if (input.gt) {
      form.append("gt", input.gt, "gt.png");
    }
    const response = await this.fetchImpl(this.url("/api/runs"), {
      method: "POST",
      body: form,
    });
    const body = await this.json<{ run_id: string }>(response);
    return body.run_id;
  }

  async getRun(runId: string): Promise<RunRecord> {
    return this.json(await this.fetchImpl(this.url(`/api/runs/${runId}`)));
  }

  async postSelection(runId: string, labels: number[]): Promise<SelectionResponse> {
    const response = await this.fetchImpl(this.url(`/api/runs/${runId}/selection`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ labels }),
    });
    return this.json(response);
  }

  /** fetch a JSON artifact (regions.json, scores.json) by its artifact URL */
  async fetchJsonArtifact<T>(artifactUrl: string): Promise<T> {
    return this.json(await this.fetchImpl(this.url(artifactUrl)));
  }

  async fetchArtifactBytes(artifactUrl: string): Promise<Blob> {
    const response = await this.fetchImpl(this.url(artifactUrl));
    if (!response.ok) throw await errorFrom(response);
    return response.blob();
  }

  private async json<T>(response: Response): Promise<T> {
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as T;
  }
}
