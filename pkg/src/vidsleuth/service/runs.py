"""Run records: status state machine, append-only event log, artifact refs."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from ..errors import IllegalTransition, NotFound


class RunStatus(Enum):
    PENDING = "PENDING"
    RUNNING = "RUNNING"
    REPORT_READY = "REPORT_READY"
    COMMENT_READY = "COMMENT_READY"
    POSTED = "POSTED"
    FAILED = "FAILED"


_ORDER = [
    RunStatus.PENDING,
    RunStatus.RUNNING,
    RunStatus.REPORT_READY,
    RunStatus.COMMENT_READY,
    RunStatus.POSTED,
]
TERMINAL = {RunStatus.POSTED, RunStatus.FAILED}


def is_legal_transition(current: RunStatus, new: RunStatus) -> bool:
    if current in TERMINAL:
        return False
    if new is RunStatus.FAILED:
        return True
    return _ORDER.index(new) > _ORDER.index(current)


@dataclass
class RunRecord:
    run_id: str
    video_id: str
    status: RunStatus = RunStatus.PENDING
    theme: str | None = None
    report_ref: str | None = None
    draft_refs: list[str] = field(default_factory=list)
    error: str | None = None
    timestamps: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "video_id": self.video_id,
            "status": self.status.value,
            "theme": self.theme,
            "report_ref": self.report_ref,
            "draft_refs": list(self.draft_refs),
            "error": self.error,
            "timestamps": dict(self.timestamps),
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "RunRecord":
        return cls(
            run_id=raw["run_id"],
            video_id=raw["video_id"],
            status=RunStatus(raw["status"]),
            theme=raw.get("theme"),
            report_ref=raw.get("report_ref"),
            draft_refs=list(raw.get("draft_refs", [])),
            error=raw.get("error"),
            timestamps=dict(raw.get("timestamps", {})),
        )


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class RunStore:
    """Per-run directory with events.jsonl (append-only) + state.json."""

    def __init__(self, data_dir: str | Path, *, clock: Callable[[], datetime] = _utc_now):
        self.runs_dir = Path(data_dir) / "runs"
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self._lock = threading.Lock()

    def run_dir(self, run_id: str) -> Path:
        return self.runs_dir / run_id

    def _state_path(self, run_id: str) -> Path:
        return self.run_dir(run_id) / "state.json"

    def _events_path(self, run_id: str) -> Path:
        return self.run_dir(run_id) / "events.jsonl"

    def _append_event(self, run_id: str, event: dict[str, Any]) -> None:
        event = {"at": self.clock().isoformat(), **event}
        with self._events_path(run_id).open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _write_state(self, record: RunRecord) -> None:
        path = self._state_path(record.run_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(record.to_json(), indent=2, sort_keys=True), encoding="utf-8"
        )
        tmp.rename(path)

    def new_run_id(self, video_id: str) -> str:
        base = f"{video_id}-{self.clock().strftime('%Y%m%dT%H%M%SZ')}"
        run_id = base
        suffix = 2
        while self.run_dir(run_id).exists():
            run_id = f"{base}-{suffix}"
            suffix += 1
        return run_id

    def create(self, video_id: str, *, theme: str | None = None, run_id: str | None = None) -> RunRecord:
        if not video_id:
            raise ValueError("video_id must be non-empty")
        with self._lock:
            run_id = run_id or self.new_run_id(video_id)
            directory = self.run_dir(run_id)
            if directory.exists():
                raise ValueError(f"run {run_id} already exists")
            directory.mkdir(parents=True)
            record = RunRecord(run_id=run_id, video_id=video_id, theme=theme)
            record.timestamps[RunStatus.PENDING.value] = self.clock().isoformat()
            self._append_event(run_id, {"event": "created", "video_id": video_id, "theme": theme})
            self._append_event(run_id, {"event": "status", "to": RunStatus.PENDING.value})
            self._write_state(record)
            return record

    def get(self, run_id: str) -> RunRecord:
        path = self._state_path(run_id)
        if not path.exists():
            raise NotFound(f"run {run_id} not found")
        return RunRecord.from_json(json.loads(path.read_text(encoding="utf-8")))

    def list(self) -> list[RunRecord]:
        records = []
        for directory in sorted(self.runs_dir.iterdir()):
            if (directory / "state.json").exists():
                records.append(self.get(directory.name))
        return records

    def transition(self, record: RunRecord, status: RunStatus, *, error: str | None = None) -> RunRecord:
        with self._lock:
            if not is_legal_transition(record.status, status):
                raise IllegalTransition(f"{record.status.value} -> {status.value}")
            record.status = status
            record.timestamps[status.value] = self.clock().isoformat()
            if error is not None:
                record.error = error
            self._append_event(record.run_id, {"event": "status", "to": status.value, "error": error})
            self._write_state(record)
            return record

    def attach_report(self, record: RunRecord, report_ref: str) -> None:
        with self._lock:
            record.report_ref = report_ref
            self._append_event(record.run_id, {"event": "artifact", "kind": "report", "ref": report_ref})
            self._write_state(record)

    def attach_draft(self, record: RunRecord, draft_ref: str) -> None:
        with self._lock:
            record.draft_refs.append(draft_ref)
            self._append_event(record.run_id, {"event": "artifact", "kind": "draft", "ref": draft_ref})
            self._write_state(record)

    def events(self, run_id: str) -> list[dict[str, Any]]:
        path = self._events_path(run_id)
        if not path.exists():
            raise NotFound(f"run {run_id} has no event log")
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]

    def verify_event_log(self, run_id: str) -> None:
        """Replay the event log, raising IllegalTransition on any bad step."""
        status: RunStatus | None = None
        for event in self.events(run_id):
            if event.get("event") != "status":
                continue
            new = RunStatus(event["to"])
            if status is not None and not is_legal_transition(status, new):
                raise IllegalTransition(f"{status.value} -> {new.value} in {run_id} event log")
            status = new

    def recover_interrupted(self) -> list[str]:
        """Fail any run left PENDING/RUNNING by a crash; returns their ids."""
        failed = []
        for record in self.list():
            if record.status in (RunStatus.PENDING, RunStatus.RUNNING):
                self.transition(record, RunStatus.FAILED, error="interrupted: service restarted")
                failed.append(record.run_id)
        return failed
