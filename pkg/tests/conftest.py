"""Shared fixtures: replay transports built from recorded response bytes."""

from pathlib import Path

import pytest

from vidsleuth.ingest.platform import API_BASE, TIMEDTEXT_URL
from vidsleuth.net import ReplayTransport, record_response

FIXTURES = Path(__file__).parent / "fixtures"


def _body(relative: str) -> bytes:
    return (FIXTURES / relative).read_bytes()


@pytest.fixture
def platform_replay(tmp_path):
    """Replay transport pre-loaded with the recorded platform responses."""
    directory = tmp_path / "platform-replay"
    key = {"key": "test"}

    record_response(
        directory, f"{API_BASE}/videos",
        {"part": "snippet", "id": "vid123", **key}, 200, _body("platform/video_ok.json"),
    )
    record_response(
        directory, f"{API_BASE}/videos",
        {"part": "snippet", "id": "vid456", **key}, 200, _body("platform/video_no_thumb.json"),
    )
    record_response(
        directory, f"{API_BASE}/videos",
        {"part": "snippet", "id": "ghost", **key}, 200, _body("platform/video_missing.json"),
    )
    record_response(
        directory, f"{API_BASE}/captions",
        {"part": "snippet", "videoId": "vid123", **key}, 200,
        _body("platform/captions_list_en_fr.json"),
    )
    record_response(
        directory, f"{API_BASE}/captions",
        {"part": "snippet", "videoId": "vid456", **key}, 200,
        _body("platform/captions_list_en_only.json"),
    )
    record_response(
        directory, f"{API_BASE}/captions",
        {"part": "snippet", "videoId": "silent", **key}, 200,
        _body("platform/captions_list_empty.json"),
    )
    record_response(
        directory, f"{API_BASE}/videos",
        {"part": "snippet", "id": "silent", **key}, 200, _body("platform/video_ok.json"),
    )
    record_response(
        directory, f"{API_BASE}/commentThreads",
        {
            "part": "snippet,replies", "videoId": "silent", "maxResults": "50",
            "order": "relevance", "textFormat": "plainText", **key,
        },
        200, _body("platform/comments_threads.json"),
    )
    record_response(
        directory, TIMEDTEXT_URL,
        {"v": "vid123", "lang": "en", "fmt": "vtt"}, 200, _body("platform/timedtext_en.vtt"),
    )
    record_response(
        directory, TIMEDTEXT_URL,
        {"v": "vid456", "lang": "en", "fmt": "vtt", "kind": "asr"}, 200,
        _body("platform/timedtext_en.vtt"),
    )
    record_response(
        directory, f"{API_BASE}/commentThreads",
        {
            "part": "snippet,replies", "videoId": "vid123", "maxResults": "50",
            "order": "relevance", "textFormat": "plainText", **key,
        },
        200, _body("platform/comments_threads.json"),
    )
    record_response(
        directory, f"{API_BASE}/commentThreads",
        {
            "part": "snippet,replies", "videoId": "vid123", "maxResults": "2",
            "order": "relevance", "textFormat": "plainText", **key,
        },
        200, _body("platform/comments_threads.json"),
    )
    record_response(
        directory, f"{API_BASE}/commentThreads",
        {
            "part": "snippet,replies", "videoId": "nocomments", "maxResults": "50",
            "order": "relevance", "textFormat": "plainText", **key,
        },
        403, _body("platform/comments_disabled.json"),
    )
    return ReplayTransport(directory)
