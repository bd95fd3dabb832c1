/** Wire types mirroring the service API. The console never re-derives any of
 * this client-side; it renders what the server says. */

export type RunStatus =
  | "PENDING"
  | "RUNNING"
  | "REPORT_READY"
  | "COMMENT_READY"
  | "POSTED"
  | "FAILED";

export interface UserComment {
  comment_id: string;
  author: string;
  text: string;
  like_count: number;
  reply_to: string | null;
}

export interface RunRecord {
  run_id: string;
  video_id: string;
  status: RunStatus;
  theme: string | null;
  report_ref: string | null;
  draft_refs: string[];
  error: string | null;
  timestamps: Record<string, string>;
  comments?: UserComment[];
}

export interface RubricEntry {
  score: number;
  feedback: string;
}

export interface Draft {
  draft_id: string;
  run_id: string;
  text: string;
  cited_urls: string[];
  target_comment_id: string | null;
  generation: number;
  approved: boolean;
  evaluations: Record<string, RubricEntry>[];
  overall_scores: number[];
}

export type PostState = "DRY_RUN" | "QUEUED" | "POSTED" | "REJECTED";

export interface PostOutcome {
  state: PostState;
  posted_text: string;
  posted_at: string | null;
  platform_comment_id: string | null;
  rejection_reason: string | null;
  scheduled_for: string | null;
  draft_id: string | null;
}

export interface QueueEntry {
  entry_id: string;
  draft_id: string;
  video_id: string;
  text: string;
  eta: string;
  target_comment_id: string | null;
}

export interface QueueView {
  entries: QueueEntry[];
  outcomes: PostOutcome[];
  next_eligible_at: string;
  max_posts_per_day: number;
  now: string;
}

export type ReportFormat = "md" | "txt" | "json";
