/** Console view-model: mirrors server state, guards illegal actions.
 *
 * Nothing here mutates optimistically; every state change is the result of a
 * server response, and verdicts/report content are rendered verbatim from
 * the server's output.
 */

import { ApiError, ConsoleApi } from "./api";
import type { Draft, QueueView, RunRecord, UserComment } from "./types";

export interface PostDialog {
  draftId: string;
  /** Exact text the server will post (post-strip, post-disclosure). */
  previewText: string;
  stripUrls: boolean;
}

export interface Guard {
  allowed: boolean;
  reason: string;
}

const POLL_INTERVAL_MS = 3_000;

export class ConsoleStore {
  runs: RunRecord[] = [];
  selectedRunId: string | null = null;
  selectedRun: RunRecord | null = null;
  reportMarkdown: string | null = null;
  drafts: Draft[] = [];
  comments: UserComment[] = [];
  replyTargetId: string | null = null;
  queue: QueueView | null = null;
  postDialog: PostDialog | null = null;
  startRunError: string | null = null;
  unknownRunIds = new Set<string>();
  lastError: string | null = null;

  constructor(private readonly api: ConsoleApi) {}

  get pollIntervalMs(): number {
    return POLL_INTERVAL_MS;
  }

  // -- refresh ---------------------------------------------------------------

  async refresh(): Promise<void> {
    this.runs = await this.api.listRuns();
    this.queue = await this.api.queue();
    if (this.selectedRunId !== null) {
      await this.loadSelectedRun();
    }
  }

  private async loadSelectedRun(): Promise<void> {
    if (this.selectedRunId === null) return;
    try {
      this.selectedRun = await this.api.getRun(this.selectedRunId);
      this.comments = this.selectedRun.comments ?? [];
      this.unknownRunIds.delete(this.selectedRunId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        // Server no longer knows this run; surface it with a refresh action
        // instead of guessing.
        this.unknownRunIds.add(this.selectedRunId);
        this.selectedRun = null;
        return;
      }
      throw error;
    }
    if (this.selectedRun.report_ref) {
      this.reportMarkdown = await this.api.getReport(this.selectedRunId, "md");
    } else {
      this.reportMarkdown = null;
    }
    this.drafts =
      this.selectedRun.draft_refs.length > 0
        ? await this.api.getDrafts(this.selectedRunId)
        : [];
  }

  async selectRun(runId: string): Promise<void> {
    this.selectedRunId = runId;
    this.replyTargetId = null;
    this.postDialog = null;
    await this.loadSelectedRun();
  }

  // -- starting runs -----------------------------------------------------------

  async startRun(videoId: string, theme: string | null): Promise<string | null> {
    const trimmed = videoId.trim();
    if (!trimmed) {
      this.startRunError = "Enter a video id first.";
      return null; // invalid input never reaches the server
    }
    this.startRunError = null;
    try {
      const { run_id } = await this.api.startRun(trimmed, theme);
      await this.refresh();
      return run_id;
    } catch (error) {
      if (error instanceof ApiError) {
        this.startRunError = error.detail;
        return null;
      }
      throw error;
    }
  }

  // -- reply targets -------------------------------------------------------------

  latestDraft(): Draft | null {
    return this.drafts.length > 0 ? this.drafts[this.drafts.length - 1] : null;
  }

  canChooseReplyTarget(): Guard {
    return this.canRegenerate();
  }

  canRegenerate(): Guard {
    const run = this.selectedRun;
    if (run === null) return { allowed: false, reason: "No run selected." };
    if (run.status === "POSTED") {
      return { allowed: false, reason: "Run already posted; drafts are frozen." };
    }
    if (run.status !== "COMMENT_READY") {
      return { allowed: false, reason: `Run is ${run.status}; no draft to regenerate.` };
    }
    if (this.drafts.length === 0) {
      return { allowed: false, reason: "Run has no drafts yet." };
    }
    return { allowed: true, reason: "" };
  }

  chooseReplyTarget(commentId: string | null): void {
    if (commentId !== null && !this.canChooseReplyTarget().allowed) return;
    this.replyTargetId = commentId;
  }

  /** Regenerate the latest draft, in reply mode when a target is selected. */
  async regenerate(): Promise<Draft | null> {
    const guard = this.canRegenerate();
    const draft = this.latestDraft();
    if (!guard.allowed || draft === null) return null;
    const regenerated = await this.api.regenerate(draft.draft_id, this.replyTargetId);
    await this.loadSelectedRun();
    return regenerated;
  }

  // -- posting ----------------------------------------------------------------------

  postsScheduledToday(): number {
    const queue = this.queue;
    if (queue === null) return 0;
    const today = queue.now.slice(0, 10);
    const posted = queue.outcomes.filter(
      (o) => o.state === "POSTED" && o.posted_at !== null && o.posted_at.slice(0, 10) === today,
    ).length;
    const queued = queue.entries.filter((e) => e.eta.slice(0, 10) === today).length;
    return posted + queued;
  }

  atDailyCap(): boolean {
    const queue = this.queue;
    if (queue === null) return false;
    return this.postsScheduledToday() >= queue.max_posts_per_day;
  }

  canPost(): Guard {
    const run = this.selectedRun;
    if (run === null) return { allowed: false, reason: "No run selected." };
    if (run.status === "POSTED") {
      return { allowed: false, reason: "Run already posted." };
    }
    if (run.status !== "COMMENT_READY") {
      return { allowed: false, reason: `Run is ${run.status}; nothing to post.` };
    }
    if (this.drafts.length === 0) {
      return { allowed: false, reason: "Run has no drafts." };
    }
    if (this.atDailyCap()) {
      const cap = this.queue?.max_posts_per_day ?? 0;
      return {
        allowed: false,
        reason: `Daily cap reached (${cap} posts per day); try again tomorrow.`,
      };
    }
    return { allowed: true, reason: "" };
  }

  /** Open the confirm dialog. The preview text comes from a server dry run,
   * so it is exactly what a real post would publish. */
  async openPostConfirm(draftId: string, stripUrls: boolean): Promise<PostDialog | null> {
    if (!this.canPost().allowed) return null;
    const preview = await this.api.postDraft(draftId, { dryRun: true, stripUrls });
    this.postDialog = { draftId, previewText: preview.posted_text, stripUrls };
    return this.postDialog;
  }

  closePostConfirm(): void {
    this.postDialog = null;
  }

  /** Approve and post what the dialog displayed. */
  async confirmPost(idempotencyKey?: string): Promise<void> {
    const dialog = this.postDialog;
    if (dialog === null) return;
    await this.api.approve(dialog.draftId);
    await this.api.postDraft(dialog.draftId, {
      dryRun: false,
      stripUrls: dialog.stripUrls,
      idempotencyKey,
    });
    this.postDialog = null;
    await this.refresh();
  }

  // -- queue countdown ------------------------------------------------------------

  /** Seconds until the next post slot, from server timestamps (no local clock). */
  nextEligibleInSeconds(): number | null {
    const queue = this.queue;
    if (queue === null) return null;
    const delta =
      (Date.parse(queue.next_eligible_at) - Date.parse(queue.now)) / 1000;
    return Math.max(0, Math.round(delta));
  }
}

export function draftLabel(draft: Draft): string {
  return draft.target_comment_id === null ? "General comment" : "Reply to user";
}

export function formatCountdown(seconds: number | null): string {
  if (seconds === null) return "—";
  if (seconds === 0) return "now";
  const hours = Math.floor(seconds / 3600);
  const minutes = Math.floor((seconds % 3600) / 60);
  const rest = seconds % 60;
  if (hours > 0) return `${hours}h ${minutes}m`;
  if (minutes > 0) return `${minutes}m ${rest}s`;
  return `${rest}s`;
}
