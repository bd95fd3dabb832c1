/** DOM wiring: renders the store and forwards user actions to it.
 * State refresh is poll-based (no server push needed for one operator). */

import { ConsoleApi } from "./api";
import { renderMarkdown } from "./markdown";
import { ConsoleStore, draftLabel, formatCountdown } from "./state";
import type { RunRecord, UserComment } from "./types";

const api = new ConsoleApi("");
const store = new ConsoleStore(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function statusBadge(run: RunRecord): string {
  return `<span class="badge status-${run.status.toLowerCase()}">${run.status}</span>`;
}

function renderRuns(): void {
  const list = el<HTMLUListElement>("runs");
  list.innerHTML = "";
  for (const run of store.runs) {
    const item = document.createElement("li");
    item.innerHTML = `${statusBadge(run)} <strong>${run.video_id}</strong> <small>${run.run_id}</small>`;
    if (store.unknownRunIds.has(run.run_id)) {
      item.innerHTML += ' <em>(unknown on server — refresh)</em>';
    }
    if (run.run_id === store.selectedRunId) item.classList.add("selected");
    item.onclick = () => {
      void store.selectRun(run.run_id).then(renderAll);
    };
    list.appendChild(item);
  }
}

function renderReport(): void {
  const pane = el<HTMLDivElement>("report");
  pane.innerHTML = store.reportMarkdown
    ? renderMarkdown(store.reportMarkdown)
    : "<p><em>No report yet.</em></p>";
  const run = store.selectedRun;
  const errorBox = el<HTMLDivElement>("run-error");
  errorBox.textContent = run?.error ? `Run error: ${run.error}` : "";
}

function renderComments(): void {
  const list = el<HTMLUListElement>("comments");
  list.innerHTML = "";
  const canPick = store.canChooseReplyTarget().allowed;
  const byParent = new Map<string | null, UserComment[]>();
  for (const comment of store.comments) {
    const key = comment.reply_to;
    const bucket = byParent.get(key) ?? [];
    bucket.push(comment);
    byParent.set(key, bucket);
  }
  const renderThread = (comment: UserComment, depth: number) => {
    const item = document.createElement("li");
    item.style.marginLeft = `${depth * 1.5}em`;
    const selected = store.replyTargetId === comment.comment_id;
    item.innerHTML =
      `<strong>${comment.author}</strong> (${comment.like_count} likes): ${comment.text} ` +
      `<button ${canPick ? "" : "disabled"} data-id="${comment.comment_id}">` +
      `${selected ? "✔ reply target" : "reply to this"}</button>`;
    const button = item.querySelector("button")!;
    button.onclick = () => {
      store.chooseReplyTarget(selected ? null : comment.comment_id);
      renderAll();
    };
    list.appendChild(item);
    for (const child of byParent.get(comment.comment_id) ?? []) {
      renderThread(child, depth + 1);
    }
  };
  for (const top of byParent.get(null) ?? []) renderThread(top, 0);
}

function renderDrafts(): void {
  const pane = el<HTMLDivElement>("drafts");
  pane.innerHTML = "";
  const regenGuard = store.canRegenerate();
  const postGuard = store.canPost();
  for (const draft of store.drafts) {
    const card = document.createElement("div");
    card.className = "draft";
    const scores = draft.overall_scores.map((s) => `${s}%`).join(" → ") || "n/a";
    card.innerHTML =
      `<h4>${draftLabel(draft)} <small>${draft.draft_id} · gen ${draft.generation} · ` +
      `rubric ${scores}${draft.approved ? " · approved" : ""}</small></h4>` +
      `<p>${draft.text}</p>`;
    const postButton = document.createElement("button");
    postButton.textContent = "Approve & post…";
    postButton.disabled = !postGuard.allowed;
    postButton.title = postGuard.reason;
    postButton.onclick = () => {
      const stripUrls = el<HTMLInputElement>("strip-urls").checked;
      void store.openPostConfirm(draft.draft_id, stripUrls).then(renderAll);
    };
    card.appendChild(postButton);
    pane.appendChild(card);
  }
  const regenButton = el<HTMLButtonElement>("regenerate");
  regenButton.disabled = !regenGuard.allowed;
  regenButton.title = regenGuard.reason;
  regenButton.textContent = store.replyTargetId
    ? "Regenerate as reply to selected comment"
    : "Regenerate general comment";
  const postNote = el<HTMLDivElement>("post-note");
  postNote.textContent = postGuard.allowed ? "" : postGuard.reason;
}

function renderQueue(): void {
  const pane = el<HTMLDivElement>("queue");
  const queue = store.queue;
  if (!queue) {
    pane.textContent = "…";
    return;
  }
  const countdown = formatCountdown(store.nextEligibleInSeconds());
  const rows = queue.entries
    .map((entry) => `<li>${entry.draft_id} → eta ${entry.eta}</li>`)
    .join("");
  const outcomes = queue.outcomes
    .slice(-5)
    .map((o) => `<li>${o.state} ${o.draft_id ?? ""} ${o.posted_at ?? ""}</li>`)
    .join("");
  pane.innerHTML =
    `<p>Next post slot: <strong>${countdown}</strong> · today ` +
    `${store.postsScheduledToday()}/${queue.max_posts_per_day}</p>` +
    `<ul>${rows}</ul><h4>Recent outcomes</h4><ul>${outcomes}</ul>`;
}

function renderDialog(): void {
  const dialog = el<HTMLDivElement>("confirm");
  if (!store.postDialog) {
    dialog.style.display = "none";
    return;
  }
  dialog.style.display = "block";
  el<HTMLPreElement>("confirm-text").textContent = store.postDialog.previewText;
}

function renderAll(): void {
  renderRuns();
  renderReport();
  renderComments();
  renderDrafts();
  renderQueue();
  renderDialog();
  el<HTMLDivElement>("start-error").textContent = store.startRunError ?? "";
}

function wireActions(): void {
  el<HTMLButtonElement>("start").onclick = () => {
    const videoId = el<HTMLInputElement>("video-id").value;
    const theme = el<HTMLInputElement>("theme").value || null;
    void store.startRun(videoId, theme).then(renderAll);
    renderAll(); // show validation errors immediately
  };
  el<HTMLButtonElement>("regenerate").onclick = () => {
    void store.regenerate().then(renderAll);
  };
  el<HTMLButtonElement>("confirm-post").onclick = () => {
    void store.confirmPost(crypto.randomUUID()).then(renderAll);
  };
  el<HTMLButtonElement>("confirm-cancel").onclick = () => {
    store.closePostConfirm();
    renderAll();
  };
}

async function start(): Promise<void> {
  wireActions();
  await store.refresh();
  renderAll();
  setInterval(() => {
    void store.refresh().then(renderAll);
  }, store.pollIntervalMs);
}

void start();
