"""HTTP transport with content-addressed record/replay.

External backends (video platform, search, encyclopedia, fact-check feeds)
are reached through a tiny transport interface so every client can run live,
record raw response bytes to disk, or replay them deterministically.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol

import requests

from .errors import MissingRecording, TransportError

# Never persist credentials into recordings.
_SECRET_PARAMS = {"key", "apikey", "api_key", "access_token", "token"}


@dataclass(frozen=True)
class TransportResponse:
    status: int
    body: bytes

    def json(self):
        return json.loads(self.body.decode("utf-8"))


class HttpTransport(Protocol):
    def get(self, url: str, params: Mapping[str, str] | None = None) -> TransportResponse: ...


def request_key(url: str, params: Mapping[str, str] | None) -> str:
    """Stable hash of a GET request with secret parameters scrubbed."""
    items = sorted((params or {}).items())
    canonical = url + "?" + "&".join(
        f"{k}=" + ("REDACTED" if k.lower() in _SECRET_PARAMS else str(v)) for k, v in items
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RequestsTransport:
    def __init__(self, *, timeout: float = 30.0, session: requests.Session | None = None):
        self.timeout = timeout
        self.session = session or requests.Session()

    def get(self, url: str, params: Mapping[str, str] | None = None) -> TransportResponse:
        try:
            response = self.session.get(url, params=dict(params or {}), timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"GET {url} failed: {exc}") from exc
        return TransportResponse(status=response.status_code, body=response.content)


def record_response(
    directory: str | Path,
    url: str,
    params: Mapping[str, str] | None,
    status: int,
    body: bytes,
) -> str:
    """Write one recorded response; returns the request key. Append-only."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    key = request_key(url, params)
    body_path = directory / f"{key}.body"
    meta_path = directory / f"{key}.meta.json"
    if not body_path.exists():
        body_path.write_bytes(body)
        scrubbed = {
            k: ("REDACTED" if k.lower() in _SECRET_PARAMS else str(v))
            for k, v in (params or {}).items()
        }
        meta_path.write_text(
            json.dumps({"url": url, "params": scrubbed, "status": status}, indent=2),
            encoding="utf-8",
        )
    return key


class ReplayTransport:
    """Serves recorded responses from disk; never touches the network."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def get(self, url: str, params: Mapping[str, str] | None = None) -> TransportResponse:
        key = request_key(url, params)
        body_path = self.directory / f"{key}.body"
        meta_path = self.directory / f"{key}.meta.json"
        if not body_path.exists() or not meta_path.exists():
            raise MissingRecording(f"no recorded response for GET {url} ({key[:12]}…)")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        return TransportResponse(status=int(meta["status"]), body=body_path.read_bytes())


class RecordingTransport:
    """Wraps a live transport, persisting every response for later replay."""

    def __init__(self, inner: HttpTransport, directory: str | Path):
        self.inner = inner
        self.directory = Path(directory)
        self._lock = threading.Lock()

    def get(self, url: str, params: Mapping[str, str] | None = None) -> TransportResponse:
        key = request_key(url, params)
        body_path = self.directory / f"{key}.body"
        if body_path.exists():
            return ReplayTransport(self.directory).get(url, params)
        response = self.inner.get(url, params)
        with self._lock:
            record_response(self.directory, url, params, response.status, response.body)
        return response


class RateLimiter:
    """Enforces a minimum interval between calls; shared per backend."""

    def __init__(self, min_interval_s: float = 0.0, *, sleep: Callable[[float], None] = time.sleep):
        self.min_interval_s = min_interval_s
        self._sleep = sleep
        self._lock = threading.Lock()
        self._last_call = 0.0

    def acquire(self) -> None:
        if self.min_interval_s <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._last_call + self.min_interval_s - now
            if wait > 0:
                self._sleep(wait)
                now = time.monotonic()
            self._last_call = max(now, self._last_call + self.min_interval_s)
