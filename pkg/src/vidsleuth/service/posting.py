"""Posting queue with the spam-avoidance policy.

Deployment learnings baked in: posted comments carry no URLs (stripped, with
a single "[source on request]" placeholder) and posts are paced several
hours apart with a daily cap. Posting always goes through a single serialized
queue so pacing holds globally.
"""

from __future__ import annotations

import json
import re
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Protocol

from ..errors import PlatformRejection, PolicyViolation

URL_PLACEHOLDER = "[source on request]"

# The pattern set a "posted without URLs" guarantee is checked against.
URL_PATTERNS = [
    re.compile(r"https?://[^\s<>()\[\]{}\"']+", re.IGNORECASE),
    re.compile(r"\bwww\.[^\s<>()\[\]{}\"']+", re.IGNORECASE),
]

DEFAULT_DISCLOSURE = (
    "Transparency note: this comment was researched and written by an AI "
    "fact-checking assistant."
)


def contains_url(text: str) -> bool:
    return any(pattern.search(text) for pattern in URL_PATTERNS)


def strip_urls(text: str) -> str:
    """Remove every URL; substitute one placeholder at the first removal site."""
    replaced_once = False

    def substitute(match: re.Match) -> str:
        nonlocal replaced_once
        if replaced_once:
            return ""
        replaced_once = True
        return URL_PLACEHOLDER

    for pattern in URL_PATTERNS:
        text = pattern.sub(substitute, text)
    # Grammar-safe cleanup: collapse doubled spaces and drop stray space
    # before closing punctuation left behind by removals.
    text = re.sub(r"[ \t]{2,}", " ", text)
    text = re.sub(r" ([.,;:!?)\]])", r"\1", text)
    text = re.sub(r"\( ", "(", text)
    return text.strip()


@dataclass(frozen=True)
class PostingPolicy:
    strip_urls: bool = True
    min_interval: timedelta = timedelta(hours=4)
    max_posts_per_day: int = 4
    dry_run: bool = False

    def __post_init__(self) -> None:
        if self.min_interval <= timedelta(0):
            raise ValueError("min_interval must be > 0")
        if self.max_posts_per_day < 1:
            raise ValueError("max_posts_per_day must be >= 1")

    def to_json(self) -> dict[str, Any]:
        return {
            "strip_urls": self.strip_urls,
            "min_interval_s": self.min_interval.total_seconds(),
            "max_posts_per_day": self.max_posts_per_day,
            "dry_run": self.dry_run,
        }


class PostState(Enum):
    DRY_RUN = "DRY_RUN"
    QUEUED = "QUEUED"
    POSTED = "POSTED"
    REJECTED = "REJECTED"


@dataclass(frozen=True)
class PostOutcome:
    state: PostState
    posted_text: str
    policy: PostingPolicy
    posted_at: datetime | None = None
    platform_comment_id: str | None = None
    rejection_reason: str | None = None
    scheduled_for: datetime | None = None
    draft_id: str | None = None

    def __post_init__(self) -> None:
        if self.policy.strip_urls and contains_url(self.posted_text):
            raise ValueError("posted_text contains a URL despite strip_urls policy")

    def to_json(self) -> dict[str, Any]:
        return {
            "state": self.state.value,
            "posted_text": self.posted_text,
            "posted_at": self.posted_at.isoformat() if self.posted_at else None,
            "platform_comment_id": self.platform_comment_id,
            "rejection_reason": self.rejection_reason,
            "scheduled_for": self.scheduled_for.isoformat() if self.scheduled_for else None,
            "draft_id": self.draft_id,
            "policy": self.policy.to_json(),
        }


@dataclass(frozen=True)
class QueueEntry:
    entry_id: str
    draft_id: str
    video_id: str
    text: str  # prepared: strip/disclosure already applied
    eta: datetime
    policy: PostingPolicy
    target_comment_id: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "entry_id": self.entry_id,
            "draft_id": self.draft_id,
            "video_id": self.video_id,
            "text": self.text,
            "eta": self.eta.isoformat(),
            "target_comment_id": self.target_comment_id,
            "policy": self.policy.to_json(),
        }


class PlatformPoster(Protocol):
    def post_comment(self, video_id: str, text: str, *, reply_to: str | None = None) -> str: ...


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class PostQueue:
    """Single serialized posting queue enforcing pacing and the daily cap.

    The clock is injectable so pacing behavior is testable under a
    simulated schedule.
    """

    def __init__(
        self,
        data_dir: str | Path,
        *,
        clock: Callable[[], datetime] = _utc_now,
        disclosure_text: str = DEFAULT_DISCLOSURE,
        disclose_first_post: bool = True,
    ):
        self.directory = Path(data_dir) / "queue"
        self.directory.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self.disclosure_text = disclosure_text
        self.disclose_first_post = disclose_first_post
        self._lock = threading.Lock()
        self._entries: list[QueueEntry] = []
        self._outcomes: list[PostOutcome] = []
        self._last_success_at: datetime | None = None
        self._posted_draft_ids: set[str] = set()
        self._videos_touched: set[str] = set()
        self._load()

    # -- persistence ---------------------------------------------------------

    def _state_path(self) -> Path:
        return self.directory / "state.json"

    def _load(self) -> None:
        path = self._state_path()
        if not path.exists():
            return
        raw = json.loads(path.read_text(encoding="utf-8"))
        self._entries = [
            QueueEntry(
                entry_id=e["entry_id"],
                draft_id=e["draft_id"],
                video_id=e["video_id"],
                text=e["text"],
                eta=datetime.fromisoformat(e["eta"]),
                policy=_policy_from_json(e["policy"]),
                target_comment_id=e.get("target_comment_id"),
            )
            for e in raw.get("entries", [])
        ]
        self._outcomes = [_outcome_from_json(o) for o in raw.get("outcomes", [])]
        last = raw.get("last_success_at")
        self._last_success_at = datetime.fromisoformat(last) if last else None
        self._posted_draft_ids = set(raw.get("posted_draft_ids", []))
        self._videos_touched = set(raw.get("videos_touched", []))

    def _save(self) -> None:
        payload = {
            "entries": [e.to_json() for e in self._entries],
            "outcomes": [o.to_json() for o in self._outcomes],
            "last_success_at": self._last_success_at.isoformat()
            if self._last_success_at
            else None,
            "posted_draft_ids": sorted(self._posted_draft_ids),
            "videos_touched": sorted(self._videos_touched),
        }
        path = self._state_path()
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
        tmp.rename(path)

    # -- scheduling ----------------------------------------------------------

    def _prepare_text(self, text: str, video_id: str, policy: PostingPolicy) -> str:
        if self.disclose_first_post and video_id not in self._videos_touched:
            text = f"{text}\n\n{self.disclosure_text}"
        if policy.strip_urls:
            text = strip_urls(text)
        return text

    def _posts_on_day(self, day: datetime) -> int:
        date = day.date()
        dispatched = sum(
            1
            for o in self._outcomes
            if o.state is PostState.POSTED and o.posted_at and o.posted_at.date() == date
        )
        queued = sum(1 for e in self._entries if e.eta.date() == date)
        return dispatched + queued

    def _next_eta(self, policy: PostingPolicy) -> datetime:
        now = self.clock()
        anchors = [self._last_success_at] + [e.eta for e in self._entries]
        latest = max((a for a in anchors if a is not None), default=None)
        if latest is None:
            return now
        return max(now, latest + policy.min_interval)

    def schedule(
        self,
        draft_text: str,
        *,
        video_id: str,
        draft_id: str,
        policy: PostingPolicy,
        target_comment_id: str | None = None,
    ) -> PostOutcome:
        """Queue a post (or short-circuit on dry_run).

        Raises PolicyViolation when the projected dispatch day is already at
        the daily cap, and on duplicate draft ids (idempotency).
        """
        with self._lock:
            prepared = self._prepare_text(draft_text, video_id, policy)
            if policy.dry_run:
                return PostOutcome(
                    state=PostState.DRY_RUN,
                    posted_text=prepared,
                    policy=policy,
                    draft_id=draft_id,
                )
            if draft_id in self._posted_draft_ids or any(
                e.draft_id == draft_id for e in self._entries
            ):
                raise PolicyViolation(f"draft {draft_id} is already queued or posted")
            eta = self._next_eta(policy)
            if self._posts_on_day(eta) >= policy.max_posts_per_day:
                raise PolicyViolation(
                    f"daily cap of {policy.max_posts_per_day} posts reached for {eta.date()}"
                )
            entry = QueueEntry(
                entry_id=uuid.uuid4().hex[:12],
                draft_id=draft_id,
                video_id=video_id,
                text=prepared,
                eta=eta,
                policy=policy,
                target_comment_id=target_comment_id,
            )
            self._entries.append(entry)
            self._videos_touched.add(video_id)
            self._save()
            return PostOutcome(
                state=PostState.QUEUED,
                posted_text=prepared,
                policy=policy,
                scheduled_for=eta,
                draft_id=draft_id,
            )

    def preview(self, draft_text: str, *, video_id: str, policy: PostingPolicy) -> str:
        """Exactly the text that would be posted, without queueing anything."""
        with self._lock:
            return self._prepare_text(draft_text, video_id, policy)

    # -- dispatch --------------------------------------------------------------

    def _posted_today(self, now: datetime) -> int:
        return sum(
            1
            for o in self._outcomes
            if o.state is PostState.POSTED and o.posted_at and o.posted_at.date() == now.date()
        )

    def dispatch_due(self, poster: PlatformPoster) -> list[PostOutcome]:
        """Dispatch due entries strictly head-of-line (FIFO).

        Pacing and the daily cap are re-checked against the last successful
        post at dispatch time; a head entry that cannot go yet blocks the
        rest. State is persisted after every post so a crash can never cause
        a duplicate.
        """
        dispatched: list[PostOutcome] = []
        with self._lock:
            while self._entries:
                entry = self._entries[0]
                now = self.clock()
                due = entry.eta <= now
                paced = (
                    self._last_success_at is None
                    or now - self._last_success_at >= entry.policy.min_interval
                )
                capped = self._posted_today(now) >= entry.policy.max_posts_per_day
                if not due or not paced or capped:
                    break
                self._entries.pop(0)
                if entry.draft_id in self._posted_draft_ids:
                    self._save()
                    continue  # crash-recovery: never double post
                try:
                    comment_id = poster.post_comment(
                        entry.video_id, entry.text, reply_to=entry.target_comment_id
                    )
                    outcome = PostOutcome(
                        state=PostState.POSTED,
                        posted_text=entry.text,
                        policy=entry.policy,
                        posted_at=now,
                        platform_comment_id=comment_id,
                        draft_id=entry.draft_id,
                    )
                    self._last_success_at = now
                    self._posted_draft_ids.add(entry.draft_id)
                except PlatformRejection as exc:
                    outcome = PostOutcome(
                        state=PostState.REJECTED,
                        posted_text=entry.text,
                        policy=entry.policy,
                        rejection_reason=str(exc),
                        draft_id=entry.draft_id,
                    )
                self._outcomes.append(outcome)
                dispatched.append(outcome)
                self._save()
        return dispatched

    # -- views -----------------------------------------------------------------

    def entries(self) -> list[QueueEntry]:
        with self._lock:
            return list(self._entries)

    def outcomes(self) -> list[PostOutcome]:
        with self._lock:
            return list(self._outcomes)

    def next_eligible_at(self, policy: PostingPolicy) -> datetime:
        with self._lock:
            return self._next_eta(policy)


def _policy_from_json(raw: dict[str, Any]) -> PostingPolicy:
    return PostingPolicy(
        strip_urls=raw["strip_urls"],
        min_interval=timedelta(seconds=raw["min_interval_s"]),
        max_posts_per_day=raw["max_posts_per_day"],
        dry_run=raw.get("dry_run", False),
    )


def _outcome_from_json(raw: dict[str, Any]) -> PostOutcome:
    return PostOutcome(
        state=PostState(raw["state"]),
        posted_text=raw["posted_text"],
        policy=_policy_from_json(raw["policy"]),
        posted_at=datetime.fromisoformat(raw["posted_at"]) if raw.get("posted_at") else None,
        platform_comment_id=raw.get("platform_comment_id"),
        rejection_reason=raw.get("rejection_reason"),
        scheduled_for=datetime.fromisoformat(raw["scheduled_for"])
        if raw.get("scheduled_for")
        else None,
        draft_id=raw.get("draft_id"),
    )


def schedule_post(
    draft_text: str,
    *,
    video_id: str,
    draft_id: str,
    policy: PostingPolicy,
    queue: PostQueue,
    target_comment_id: str | None = None,
) -> PostOutcome:
    """Module-level convenience mirroring the queue's schedule contract."""
    return queue.schedule(
        draft_text,
        video_id=video_id,
        draft_id=draft_id,
        policy=policy,
        target_comment_id=target_comment_id,
    )


class ApiPoster:
    """Live poster using an OAuth bearer token from the environment."""

    ENDPOINT = "https://www.googleapis.com/youtube/v3/commentThreads"

    def __init__(self, token: str | None = None, *, token_env: str = "YOUTUBE_OAUTH_TOKEN"):
        import os

        self.token = token if token is not None else os.environ.get(token_env)
        self._token_env = token_env

    def post_comment(self, video_id: str, text: str, *, reply_to: str | None = None) -> str:
        import requests

        from ..errors import AuthError

        if not self.token:
            raise AuthError(f"posting requires an OAuth token in ${self._token_env}")
        payload: dict[str, Any] = {
            "snippet": {
                "videoId": video_id,
                "topLevelComment": {"snippet": {"textOriginal": text}},
            }
        }
        url = self.ENDPOINT
        if reply_to:
            url = "https://www.googleapis.com/youtube/v3/comments"
            payload = {"snippet": {"parentId": reply_to, "textOriginal": text}}
        response = requests.post(
            url,
            params={"part": "snippet"},
            json=payload,
            headers={"Authorization": f"Bearer {self.token}"},
            timeout=30,
        )
        if response.status_code >= 400:
            raise PlatformRejection(f"platform returned {response.status_code}: {response.text[:200]}")
        return response.json().get("id", "")
