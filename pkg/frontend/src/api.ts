/** Typed client for the service HTTP API. All console behavior goes through
 * here; the fetch implementation is injectable so tests can stub the server. */

import type {
  Draft,
  PostOutcome,
  QueueView,
  ReportFormat,
  RunRecord,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface PostOptions {
  dryRun?: boolean;
  stripUrls?: boolean;
  idempotencyKey?: string;
}

export class ConsoleApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    idempotencyKey?: string,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (idempotencyKey) headers["Idempotency-Key"] = idempotencyKey;
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  startRun(videoId: string, theme?: string | null): Promise<{ run_id: string }> {
    return this.request("POST", "/runs", {
      video_id: videoId,
      theme: theme ?? null,
    });
  }

  listRuns(): Promise<RunRecord[]> {
    return this.request("GET", "/runs");
  }

  getRun(runId: string): Promise<RunRecord> {
    return this.request("GET", `/runs/${encodeURIComponent(runId)}`);
  }

  async getReport(runId: string, format: ReportFormat): Promise<string> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/runs/${encodeURIComponent(runId)}/report?format=${format}`,
      { method: "GET" },
    );
    if (!response.ok) throw new ApiError(response.status, response.statusText);
    return response.text();
  }

  getDrafts(runId: string): Promise<Draft[]> {
    return this.request("GET", `/runs/${encodeURIComponent(runId)}/drafts`);
  }

  /** Regenerate a draft; pass a comment id for reply mode, null for general. */
  regenerate(draftId: string, targetCommentId: string | null): Promise<Draft> {
    return this.request("POST", `/drafts/${encodeURIComponent(draftId)}/regenerate`, {
      target_comment_id: targetCommentId,
    });
  }

  approve(draftId: string): Promise<Draft> {
    return this.request("POST", `/drafts/${encodeURIComponent(draftId)}/approve`);
  }

  postDraft(draftId: string, options: PostOptions = {}): Promise<PostOutcome> {
    return this.request(
      "POST",
      `/drafts/${encodeURIComponent(draftId)}/post`,
      {
        dry_run: options.dryRun ?? false,
        strip_urls: options.stripUrls ?? null,
      },
      options.idempotencyKey,
    );
  }

  queue(): Promise<QueueView> {
    return this.request("GET", "/queue");
  }
}
