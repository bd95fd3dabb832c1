"""Domain types for video ingestion."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any
from urllib.parse import urlparse


def _is_valid_url(url: str) -> bool:
    parsed = urlparse(url)
    return bool(parsed.scheme in ("http", "https") and parsed.netloc)


@dataclass(frozen=True)
class VideoMetadata:
    video_id: str
    title: str
    channel_name: str
    channel_id: str
    thumbnail_url: str | None = None
    published_at: datetime | None = None

    def __post_init__(self) -> None:
        if not self.video_id:
            raise ValueError("video_id must be non-empty")
        if self.thumbnail_url is not None and not _is_valid_url(self.thumbnail_url):
            raise ValueError(f"thumbnail_url is not a valid URL: {self.thumbnail_url!r}")


@dataclass(frozen=True, order=True)
class CaptionCue:
    """One cue: start/end in milliseconds, text with all markup stripped."""

    start: int
    end: int
    text: str

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"cue start {self.start} < 0")
        if self.end <= self.start:
            raise ValueError(f"cue end {self.end} <= start {self.start}")


class CaptionFormat(Enum):
    WEBVTT = "webvtt"
    SRT = "srt"
    PLATFORM_XML = "platform_xml"


@dataclass(frozen=True)
class CaptionTrack:
    """Raw caption document as fetched, before parsing."""

    raw: bytes
    format: CaptionFormat
    language: str = "und"
    # True when the preferred language was unavailable and we fell back to
    # the platform's default track.
    degraded: bool = False
    auto_generated: bool = False


@dataclass(frozen=True)
class Transcript:
    text: str
    source_cue_count: int
    language: str = "und"

    def __post_init__(self) -> None:
        if self.source_cue_count < 0:
            raise ValueError("source_cue_count must be >= 0")
        if (self.source_cue_count == 0) != (self.text == ""):
            raise ValueError("transcript text must be empty iff it came from zero cues")


@dataclass(frozen=True)
class UserComment:
    comment_id: str
    author: str
    text: str
    like_count: int = 0
    reply_to: str | None = None

    def __post_init__(self) -> None:
        if self.like_count < 0:
            raise ValueError("like_count must be >= 0")
        if self.reply_to is not None and self.reply_to == self.comment_id:
            raise ValueError("a comment cannot reply to itself")


def cue_to_json(cue: CaptionCue) -> dict[str, Any]:
    return {"start": cue.start, "end": cue.end, "text": cue.text}


def cue_from_json(raw: dict[str, Any]) -> CaptionCue:
    return CaptionCue(start=int(raw["start"]), end=int(raw["end"]), text=str(raw["text"]))


def cues_to_json(cues: list[CaptionCue]) -> list[dict[str, Any]]:
    """Canonical internal serialization of a parsed cue list."""
    return [cue_to_json(cue) for cue in cues]


def cues_from_json(raw: list[dict[str, Any]]) -> list[CaptionCue]:
    return [cue_from_json(item) for item in raw]
