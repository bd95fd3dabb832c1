"""Video platform client: metadata, caption tracks, comment threads.

Speaks the platform's REST wire format through an injectable transport, so
the same client runs live, recording, or replaying fixture bytes.
"""

from __future__ import annotations

import os
from datetime import datetime, timezone

from ..errors import AuthError, CommentsDisabled, NoCaptions, NotFound, TransportError
from ..net import HttpTransport, TransportResponse
from .models import CaptionFormat, CaptionTrack, UserComment, VideoMetadata

API_BASE = "https://www.googleapis.com/youtube/v3"
TIMEDTEXT_URL = "https://www.youtube.com/api/timedtext"
DEFAULT_COMMENT_LIMIT = 50


def _parse_timestamp(value: str | None) -> datetime | None:
    if not value:
        return None
    try:
        return datetime.fromisoformat(value.replace("Z", "+00:00")).astimezone(timezone.utc)
    except ValueError:
        return None


class PlatformClient:
    """Thin client over the platform data API (key from the environment)."""

    def __init__(
        self,
        transport: HttpTransport,
        api_key: str | None = None,
        *,
        api_key_env: str = "YOUTUBE_API_KEY",
    ):
        self.transport = transport
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env)
        self._api_key_env = api_key_env

    def _key(self) -> str:
        if not self.api_key:
            raise AuthError(f"no platform API key: pass api_key or set ${self._api_key_env}")
        return self.api_key

    def _get(self, url: str, params: dict[str, str]) -> TransportResponse:
        response = self.transport.get(url, params)
        if response.status in (401, 403):
            reason = _error_reason(response)
            if reason == "commentsDisabled":
                raise CommentsDisabled("comments are disabled for this video")
            raise AuthError(f"platform rejected request ({response.status}, {reason})")
        if response.status == 404:
            raise NotFound(url)
        if response.status >= 400:
            raise TransportError(f"platform returned {response.status} for {url}")
        return response

    # -- metadata ------------------------------------------------------------

    def fetch_video_metadata(self, video_id: str) -> VideoMetadata:
        if not video_id:
            raise ValueError("video_id must be non-empty")
        response = self._get(
            f"{API_BASE}/videos",
            {"part": "snippet", "id": video_id, "key": self._key()},
        )
        items = response.json().get("items", [])
        if not items:
            raise NotFound(f"video {video_id} not found")
        snippet = items[0].get("snippet", {})
        thumbnails = snippet.get("thumbnails", {})
        thumb = None
        for size in ("high", "medium", "default"):
            if size in thumbnails and thumbnails[size].get("url"):
                thumb = thumbnails[size]["url"]
                break
        return VideoMetadata(
            video_id=video_id,
            title=snippet.get("title", ""),
            channel_name=snippet.get("channelTitle", ""),
            channel_id=snippet.get("channelId", ""),
            thumbnail_url=thumb,
            published_at=_parse_timestamp(snippet.get("publishedAt")),
        )

    # -- captions ------------------------------------------------------------

    def fetch_caption_track(self, video_id: str, preferred_language: str = "en") -> CaptionTrack:
        if not video_id:
            raise ValueError("video_id must be non-empty")
        response = self._get(
            f"{API_BASE}/captions",
            {"part": "snippet", "videoId": video_id, "key": self._key()},
        )
        tracks = response.json().get("items", [])
        if not tracks:
            raise NoCaptions(f"video {video_id} has no caption track")

        chosen = None
        for track in tracks:
            if track.get("snippet", {}).get("language") == preferred_language:
                chosen = track
                break
        degraded = chosen is None
        if chosen is None:
            # Fall back to whatever the platform marks default, else the
            # first listed track.
            chosen = next(
                (t for t in tracks if t.get("snippet", {}).get("isDefault")), tracks[0]
            )
        snippet = chosen.get("snippet", {})
        language = snippet.get("language", "und")
        auto_generated = snippet.get("trackKind") == "asr"

        params = {"v": video_id, "lang": language, "fmt": "vtt"}
        if auto_generated:
            params["kind"] = "asr"
        body = self._get(TIMEDTEXT_URL, params).body
        if body.strip():
            fmt = CaptionFormat.WEBVTT
        else:
            xml_params = {k: v for k, v in params.items() if k != "fmt"}
            body = self._get(TIMEDTEXT_URL, xml_params).body
            fmt = CaptionFormat.PLATFORM_XML
            if not body.strip():
                raise NoCaptions(f"caption track for {video_id} is listed but empty")
        return CaptionTrack(
            raw=body,
            format=fmt,
            language=language,
            degraded=degraded,
            auto_generated=auto_generated,
        )

    # -- comments ------------------------------------------------------------

    def fetch_comments(self, video_id: str, limit: int = DEFAULT_COMMENT_LIMIT) -> list[UserComment]:
        if limit < 0:
            raise ValueError("limit must be >= 0")
        if limit == 0:
            return []
        response = self._get(
            f"{API_BASE}/commentThreads",
            {
                "part": "snippet,replies",
                "videoId": video_id,
                "maxResults": str(min(limit, 100)),
                "order": "relevance",
                "textFormat": "plainText",
                "key": self._key(),
            },
        )
        comments: list[UserComment] = []
        for thread in response.json().get("items", [])[:limit]:
            top_raw = thread.get("snippet", {}).get("topLevelComment", {})
            top = _comment_from_json(top_raw, reply_to=None)
            if top is None:
                continue
            comments.append(top)
            for reply_raw in thread.get("replies", {}).get("comments", []):
                reply = _comment_from_json(reply_raw, reply_to=top.comment_id)
                if reply is not None:
                    comments.append(reply)
        return comments


def _comment_from_json(raw: dict, *, reply_to: str | None) -> UserComment | None:
    comment_id = raw.get("id")
    snippet = raw.get("snippet", {})
    if not comment_id:
        return None
    return UserComment(
        comment_id=comment_id,
        author=snippet.get("authorDisplayName", ""),
        text=snippet.get("textDisplay", ""),
        like_count=int(snippet.get("likeCount", 0)),
        reply_to=reply_to,
    )


def _error_reason(response: TransportResponse) -> str:
    try:
        errors = response.json().get("error", {}).get("errors", [])
        return errors[0].get("reason", "") if errors else ""
    except Exception:
        return ""
