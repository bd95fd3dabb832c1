"""Video ingestion: platform fetches, caption parsing, transcript cleanup."""

from .captions import parse_caption_track, strip_cue_markup
from .models import (
    CaptionCue,
    CaptionFormat,
    CaptionTrack,
    Transcript,
    UserComment,
    VideoMetadata,
    cues_from_json,
    cues_to_json,
)
from .normalize import normalize_transcript
from .platform import DEFAULT_COMMENT_LIMIT, PlatformClient

__all__ = [
    "CaptionCue",
    "CaptionFormat",
    "CaptionTrack",
    "Transcript",
    "UserComment",
    "VideoMetadata",
    "PlatformClient",
    "DEFAULT_COMMENT_LIMIT",
    "parse_caption_track",
    "strip_cue_markup",
    "normalize_transcript",
    "cues_to_json",
    "cues_from_json",
]
