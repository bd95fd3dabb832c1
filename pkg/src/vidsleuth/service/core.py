"""Operator-facing service facade tying runs, drafts, and the posting queue."""

from __future__ import annotations

import json
import threading
from dataclasses import replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Callable

from ..errors import IllegalTransition, NotFound, PolicyViolation
from .config import AppConfig
from .pipeline import (
    PipelineDeps,
    RunOptions,
    load_draft,
    regenerate_draft,
    run_id_of_draft,
    run_pipeline,
    update_draft,
)
from .posting import (
    DEFAULT_DISCLOSURE,
    PlatformPoster,
    PostingPolicy,
    PostOutcome,
    PostQueue,
    PostState,
)
from .runs import RunStatus, RunStore


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class SleuthService:
    def __init__(
        self,
        config: AppConfig,
        deps: PipelineDeps,
        poster: PlatformPoster | None = None,
        *,
        clock: Callable[[], datetime] = _utc_now,
        synchronous: bool = False,
    ):
        self.config = config
        self.deps = deps
        self.poster = poster
        self.clock = clock
        self.synchronous = synchronous
        self.store = RunStore(config.data_dir, clock=clock)
        self.queue = PostQueue(
            config.data_dir,
            clock=clock,
            disclosure_text=config.disclosure_text or DEFAULT_DISCLOSURE,
            disclose_first_post=config.disclose_first_post,
        )
        self.default_policy = PostingPolicy(
            strip_urls=config.strip_urls,
            min_interval=timedelta(hours=config.min_interval_hours),
            max_posts_per_day=config.max_posts_per_day,
        )
        self._idempotency_path = Path(config.data_dir) / "idempotency.json"
        self._idempotency_lock = threading.Lock()

    # -- runs ------------------------------------------------------------------

    def run_options(self, theme: str | None, *, run_bender: bool = True) -> RunOptions:
        return RunOptions(
            theme=theme,
            retrieval_k=self.config.retrieval_k,
            comment_limit=self.config.comment_limit,
            preferred_language=self.config.preferred_language,
            run_bender=run_bender,
        )

    def start_run(self, video_id: str, theme: str | None = None, *, run_bender: bool = True) -> str:
        if not video_id or not video_id.strip():
            raise ValueError("video_id must be non-empty")
        record = self.store.create(video_id.strip(), theme=theme)
        options = self.run_options(theme, run_bender=run_bender)

        def execute() -> None:
            run_pipeline(video_id.strip(), self.deps, self.store, options, record=record)

        if self.synchronous:
            execute()
        else:
            threading.Thread(target=execute, daemon=True).start()
        return record.run_id

    def get_run(self, run_id: str) -> dict[str, Any]:
        record = self.store.get(run_id)
        payload = record.to_json()
        comments_path = self.store.run_dir(run_id) / "comments.json"
        if comments_path.exists():
            payload["comments"] = json.loads(comments_path.read_text(encoding="utf-8"))
        return payload

    def list_runs(self) -> list[dict[str, Any]]:
        return [record.to_json() for record in self.store.list()]

    def report(self, run_id: str, format: str = "md") -> tuple[str, str]:
        """Report content plus its media type."""
        record = self.store.get(run_id)
        suffixes = {"md": ("report.md", "text/markdown"), "txt": ("report.txt", "text/plain"),
                    "json": ("report.json", "application/json")}
        if format not in suffixes:
            raise ValueError(f"format must be md, txt, or json, not {format!r}")
        filename, media_type = suffixes[format]
        path = self.store.run_dir(record.run_id) / filename
        if not path.exists():
            raise NotFound(f"run {run_id} has no report yet")
        return path.read_text(encoding="utf-8"), media_type

    # -- drafts ------------------------------------------------------------------

    def drafts(self, run_id: str) -> list[dict[str, Any]]:
        record = self.store.get(run_id)
        return [load_draft(self.store, Path(ref).stem) for ref in record.draft_refs]

    def regenerate(self, draft_id: str, *, target_comment_id: str | None = None) -> dict[str, Any]:
        run_id = run_id_of_draft(draft_id)
        record = self.store.get(run_id)
        if record.status is RunStatus.POSTED:
            raise IllegalTransition("run already POSTED; no further drafts")
        load_draft(self.store, draft_id)  # 404 on unknown draft
        new_id = regenerate_draft(
            record,
            self.deps,
            self.store,
            self.run_options(record.theme),
            target_comment_id=target_comment_id,
        )
        return load_draft(self.store, new_id)

    def approve(self, draft_id: str) -> dict[str, Any]:
        record = self.store.get(run_id_of_draft(draft_id))
        if record.status is RunStatus.POSTED:
            raise IllegalTransition("run already POSTED; draft can no longer be approved")
        return update_draft(self.store, draft_id, approved=True)

    def post_draft(
        self,
        draft_id: str,
        *,
        dry_run: bool = False,
        strip_urls: bool | None = None,
    ) -> dict[str, Any]:
        draft = load_draft(self.store, draft_id)
        record = self.store.get(draft["run_id"])
        if record.status is RunStatus.POSTED:
            raise IllegalTransition("run already POSTED")
        if not draft.get("approved") and not dry_run:
            raise PolicyViolation(f"draft {draft_id} is not approved")
        policy = self.default_policy
        if strip_urls is not None:
            policy = replace(policy, strip_urls=strip_urls)
        if dry_run:
            policy = replace(policy, dry_run=True)
        outcome = self.queue.schedule(
            draft["text"],
            video_id=record.video_id,
            draft_id=draft_id,
            policy=policy,
            target_comment_id=draft.get("target_comment_id"),
        )
        if outcome.state is PostState.QUEUED:
            self.dispatch_now()
            for later in self.queue.outcomes():
                if later.draft_id == draft_id:
                    outcome = later
                    break
        return outcome.to_json()

    # -- queue ---------------------------------------------------------------------

    def dispatch_now(self) -> list[PostOutcome]:
        if self.poster is None:
            return []
        outcomes = self.queue.dispatch_due(self.poster)
        for outcome in outcomes:
            if outcome.state is PostState.POSTED and outcome.draft_id:
                try:
                    record = self.store.get(run_id_of_draft(outcome.draft_id))
                    if record.status is not RunStatus.POSTED:
                        self.store.transition(record, RunStatus.POSTED)
                except (NotFound, IllegalTransition):
                    pass
        return outcomes

    def queue_view(self) -> dict[str, Any]:
        return {
            "entries": [entry.to_json() for entry in self.queue.entries()],
            "outcomes": [outcome.to_json() for outcome in self.queue.outcomes()],
            "next_eligible_at": self.queue.next_eligible_at(self.default_policy).isoformat(),
            "max_posts_per_day": self.default_policy.max_posts_per_day,
            "now": self.clock().isoformat(),
        }

    # -- idempotency ------------------------------------------------------------------

    def idempotent(self, key: str | None, action: Callable[[], dict[str, Any]]) -> dict[str, Any]:
        """Run a mutation once per idempotency key, replaying the stored result."""
        if key is None:
            return action()
        with self._idempotency_lock:
            seen: dict[str, Any] = {}
            if self._idempotency_path.exists():
                seen = json.loads(self._idempotency_path.read_text(encoding="utf-8"))
            if key in seen:
                return seen[key]
            result = action()
            seen[key] = result
            tmp = self._idempotency_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(seen, indent=2, sort_keys=True), encoding="utf-8")
            tmp.rename(self._idempotency_path)
            return result
