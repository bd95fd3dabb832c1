/** In-memory stub of the service API for contract tests.
 * Mirrors the server's posting behavior closely enough to test the console:
 * URL stripping with a single placeholder, approval gating, daily cap. */

import type { FetchLike } from "../src/api";
import type { Draft, PostOutcome, QueueView, RunRecord } from "../src/types";

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
  headers: Record<string, string>;
}

export interface StubState {
  runs: RunRecord[];
  drafts: Record<string, Draft[]>; // run_id -> drafts
  reports: Record<string, string>; // run_id -> markdown
  queue: QueueView;
}

const URL_PATTERN = /(https?:\/\/[^\s<>()[\]{}"']+|\bwww\.[^\s<>()[\]{}"']+)/gi;

export function stripUrlsLikeServer(text: string): string {
  let first = true;
  return text
    .replace(URL_PATTERN, () => {
      if (first) {
        first = false;
        return "[source on request]";
      }
      return "";
    })
    .replace(/[ \t]{2,}/g, " ")
    .trim();
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function text(status: number, body: string, mediaType: string): Response {
  return new Response(body, { status, headers: { "Content-Type": mediaType } });
}

export function makeStubServer(state: StubState): {
  fetchImpl: FetchLike;
  requests: RecordedRequest[];
} {
  const requests: RecordedRequest[] = [];

  const findRun = (runId: string) => state.runs.find((r) => r.run_id === runId);
  const findDraft = (draftId: string) => {
    for (const drafts of Object.values(state.drafts)) {
      const hit = drafts.find((d) => d.draft_id === draftId);
      if (hit) return hit;
    }
    return undefined;
  };

  const fetchImpl: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const parsed = new URL(url, "http://stub");
    const path = parsed.pathname;
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    requests.push({
      method,
      path: path + parsed.search,
      body,
      headers: (init?.headers as Record<string, string>) ?? {},
    });

    if (method === "GET" && path === "/runs") return json(200, state.runs);
    if (method === "POST" && path === "/runs") {
      const videoId = (body as { video_id: string }).video_id;
      if (!videoId || !videoId.trim()) return json(400, { detail: "video_id required" });
      const run: RunRecord = {
        run_id: `${videoId}-new`,
        video_id: videoId,
        status: "PENDING",
        theme: (body as { theme: string | null }).theme,
        report_ref: null,
        draft_refs: [],
        error: null,
        timestamps: {},
        comments: [],
      };
      state.runs.push(run);
      return json(202, { run_id: run.run_id });
    }

    const runMatch = path.match(/^\/runs\/([^/]+)$/);
    if (method === "GET" && runMatch) {
      const run = findRun(decodeURIComponent(runMatch[1]));
      return run ? json(200, run) : json(404, { detail: "unknown run" });
    }

    const reportMatch = path.match(/^\/runs\/([^/]+)\/report$/);
    if (method === "GET" && reportMatch) {
      const markdown = state.reports[decodeURIComponent(reportMatch[1])];
      if (markdown === undefined) return json(404, { detail: "no report" });
      return text(200, markdown, "text/markdown");
    }

    const draftsMatch = path.match(/^\/runs\/([^/]+)\/drafts$/);
    if (method === "GET" && draftsMatch) {
      return json(200, state.drafts[decodeURIComponent(draftsMatch[1])] ?? []);
    }

    const regenMatch = path.match(/^\/drafts\/([^/]+)\/regenerate$/);
    if (method === "POST" && regenMatch) {
      const base = findDraft(decodeURIComponent(regenMatch[1]));
      if (!base) return json(404, { detail: "unknown draft" });
      const target = (body as { target_comment_id: string | null }).target_comment_id;
      const runDrafts = state.drafts[base.run_id];
      const fresh: Draft = {
        ...base,
        draft_id: `${base.run_id}-d${runDrafts.length + 1}`,
        target_comment_id: target,
        approved: false,
        text: target === null ? "a general comment" : `a reply to ${target}`,
      };
      runDrafts.push(fresh);
      findRun(base.run_id)?.draft_refs.push(`drafts/${fresh.draft_id}.json`);
      return json(200, fresh);
    }

    const approveMatch = path.match(/^\/drafts\/([^/]+)\/approve$/);
    if (method === "POST" && approveMatch) {
      const draft = findDraft(decodeURIComponent(approveMatch[1]));
      if (!draft) return json(404, { detail: "unknown draft" });
      const run = findRun(draft.run_id);
      if (run?.status === "POSTED") return json(409, { detail: "already posted" });
      draft.approved = true;
      return json(200, draft);
    }

    const postMatch = path.match(/^\/drafts\/([^/]+)\/post$/);
    if (method === "POST" && postMatch) {
      const draft = findDraft(decodeURIComponent(postMatch[1]));
      if (!draft) return json(404, { detail: "unknown draft" });
      const run = findRun(draft.run_id);
      if (run?.status === "POSTED") return json(409, { detail: "already posted" });
      const options = body as { dry_run: boolean; strip_urls: boolean | null };
      const strip = options.strip_urls ?? true;
      const prepared = strip ? stripUrlsLikeServer(draft.text) : draft.text;
      if (options.dry_run) {
        const outcome: PostOutcome = {
          state: "DRY_RUN",
          posted_text: prepared,
          posted_at: null,
          platform_comment_id: null,
          rejection_reason: null,
          scheduled_for: null,
          draft_id: draft.draft_id,
        };
        return json(200, outcome);
      }
      if (!draft.approved) return json(409, { detail: "not approved" });
      const outcome: PostOutcome = {
        state: "POSTED",
        posted_text: prepared,
        posted_at: state.queue.now,
        platform_comment_id: "pc1",
        rejection_reason: null,
        scheduled_for: null,
        draft_id: draft.draft_id,
      };
      state.queue.outcomes.push(outcome);
      if (run) run.status = "POSTED";
      return json(200, outcome);
    }

    if (method === "GET" && path === "/queue") return json(200, state.queue);

    return json(404, { detail: `no stub route for ${method} ${path}` });
  };

  return { fetchImpl, requests };
}

export function fixtureState(): StubState {
  const run: RunRecord = {
    run_id: "vid123-r1",
    video_id: "vid123",
    status: "COMMENT_READY",
    theme: "manosphere",
    report_ref: "report.json",
    draft_refs: ["drafts/vid123-r1-d1.json"],
    error: null,
    timestamps: { COMMENT_READY: "2026-05-01T09:00:10+00:00" },
    comments: [
      { comment_id: "c1", author: "alice", text: "so true!", like_count: 5, reply_to: null },
      { comment_id: "c1r1", author: "bob", text: "agreed", like_count: 0, reply_to: "c1" },
      { comment_id: "c2", author: "carol", text: "hmm", like_count: 2, reply_to: null },
    ],
  };
  const draft: Draft = {
    draft_id: "vid123-r1-d1",
    run_id: "vid123-r1",
    text: "Worth a look: https://research.example/dating-apps has the real numbers.",
    cited_urls: ["https://research.example/dating-apps"],
    target_comment_id: null,
    generation: 1,
    approved: false,
    evaluations: [],
    overall_scores: [85.7],
  };
  return {
    runs: [run],
    drafts: { "vid123-r1": [draft] },
    reports: {
      "vid123-r1":
        "# Fact-check: Demo\n\n## 1. claim text\n\n**Verdict:** 🔴 False\n\nreasoning\n\nSources:\n- <https://research.example/dating-apps>\n",
    },
    queue: {
      entries: [],
      outcomes: [],
      next_eligible_at: "2026-05-01T13:00:00+00:00",
      max_posts_per_day: 4,
      now: "2026-05-01T09:00:00+00:00",
    },
  };
}
