"""Provider-agnostic model client.

Plain and schema-constrained completion with bounded retry/repair, token
accounting, and a content-addressed record/replay store so every pipeline
stage can run deterministically from recorded transcripts.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Protocol, Sequence

import requests

from .errors import (
    AuthError,
    LlmError,
    MissingRecording,
    PromptTooLarge,
    QuotaExceeded,
    SchemaViolation,
    TransportError,
)

DEFAULT_MODEL = "gemini-1.5-flash"
FACTUAL_TEMPERATURE = 0.2
CREATIVE_TEMPERATURE = 0.7


@dataclass(frozen=True)
class ModelConfig:
    provider: str = "gemini"
    model_name: str = DEFAULT_MODEL
    temperature: float = FACTUAL_TEMPERATURE
    max_output_tokens: int = 4096
    request_timeout: float = 60.0
    max_prompt_chars: int = 200_000
    retry_budget: int = 2
    backoff_s: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be > 0")


def factual_config(**overrides: Any) -> ModelConfig:
    """Config for extraction/assessment calls (low temperature)."""
    overrides.setdefault("temperature", FACTUAL_TEMPERATURE)
    return ModelConfig(**overrides)


def creative_config(**overrides: Any) -> ModelConfig:
    """Config for comment generation (higher temperature)."""
    overrides.setdefault("temperature", CREATIVE_TEMPERATURE)
    return ModelConfig(**overrides)


class ModelClient(Protocol):
    def complete(self, prompt: str, config: ModelConfig) -> str: ...


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def estimate_tokens(text: str) -> int:
    # Rough 4-chars-per-token heuristic; live adapters overwrite with real counts.
    return max(1, len(text) // 4) if text else 0


@dataclass(frozen=True)
class CompletionRecord:
    prompt_sha256: str
    response: str
    latency_ms: int
    prompt_tokens: int
    completion_tokens: int
    created_at: str
    model_name: str = ""

    def to_json(self) -> dict[str, Any]:
        return {
            "prompt_sha256": self.prompt_sha256,
            "response": self.response,
            "latency_ms": self.latency_ms,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "created_at": self.created_at,
            "model_name": self.model_name,
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "CompletionRecord":
        return cls(
            prompt_sha256=raw["prompt_sha256"],
            response=raw["response"],
            latency_ms=int(raw.get("latency_ms", 0)),
            prompt_tokens=int(raw.get("prompt_tokens", 0)),
            completion_tokens=int(raw.get("completion_tokens", 0)),
            created_at=raw.get("created_at", ""),
            model_name=raw.get("model_name", ""),
        )


class RecordingStore:
    """Append-only store of completions, one file per prompt hash."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _path(self, sha: str) -> Path:
        return self.directory / f"{sha}.json"

    def load(self, sha: str) -> CompletionRecord | None:
        path = self._path(sha)
        if not path.exists():
            return None
        return CompletionRecord.from_json(json.loads(path.read_text(encoding="utf-8")))

    def save(self, record: CompletionRecord) -> None:
        with self._write_lock:
            path = self._path(record.prompt_sha256)
            if path.exists():
                return
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(record.to_json(), indent=2), encoding="utf-8")
            tmp.rename(path)

    def totals(self) -> dict[str, int]:
        """Aggregate token counts across every stored record."""
        prompt_tokens = completion_tokens = calls = 0
        for path in self.directory.glob("*.json"):
            record = CompletionRecord.from_json(json.loads(path.read_text(encoding="utf-8")))
            prompt_tokens += record.prompt_tokens
            completion_tokens += record.completion_tokens
            calls += 1
        return {
            "calls": calls,
            "prompt_tokens": prompt_tokens,
            "completion_tokens": completion_tokens,
        }


class MockModel:
    """Scripted model for tests.

    ``script`` may be a fixed string, a sequence consumed in order (the last
    element repeats), or a callable ``prompt -> response``. Prompts are kept
    on ``self.prompts`` so tests can inspect exactly what a stage sent.
    """

    def __init__(
        self,
        script: str | Sequence[str] | Callable[[str], str] = "",
        *,
        transient_failures: int = 0,
    ):
        self._script = script
        self._remaining_failures = transient_failures
        self.prompts: list[str] = []
        self.calls = 0

    def complete(self, prompt: str, config: ModelConfig) -> str:
        self.calls += 1
        self.prompts.append(prompt)
        if self._remaining_failures > 0:
            self._remaining_failures -= 1
            raise TransportError("simulated transient failure")
        if callable(self._script):
            return self._script(prompt)
        if isinstance(self._script, str):
            return self._script
        index = min(len(self.prompts) - 1, len(self._script) - 1)
        return self._script[index]


class ReplayModel:
    """Serves completions purely from a RecordingStore; no network ever."""

    def __init__(self, store: RecordingStore):
        self.store = store

    def complete(self, prompt: str, config: ModelConfig) -> str:
        sha = prompt_hash(prompt)
        record = self.store.load(sha)
        if record is None:
            raise MissingRecording(f"no recorded completion for prompt {sha[:12]}…")
        return record.response


class RecordingModel:
    """Wraps a live client, persisting every completion for later replay."""

    def __init__(self, inner: ModelClient, store: RecordingStore):
        self.inner = inner
        self.store = store

    def complete(self, prompt: str, config: ModelConfig) -> str:
        sha = prompt_hash(prompt)
        cached = self.store.load(sha)
        if cached is not None:
            return cached.response
        started = time.monotonic()
        response = self.inner.complete(prompt, config)
        latency_ms = int((time.monotonic() - started) * 1000)
        self.store.save(
            CompletionRecord(
                prompt_sha256=sha,
                response=response,
                latency_ms=latency_ms,
                prompt_tokens=estimate_tokens(prompt),
                completion_tokens=estimate_tokens(response),
                created_at=datetime.now(timezone.utc).isoformat(),
                model_name=config.model_name,
            )
        )
        return response


class GeminiClient:
    """Minimal REST adapter for the Gemini generateContent endpoint."""

    BASE_URL = "https://generativelanguage.googleapis.com/v1beta/models"

    def __init__(self, api_key: str | None = None, *, api_key_env: str = "GEMINI_API_KEY"):
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env)
        self._api_key_env = api_key_env

    def complete(self, prompt: str, config: ModelConfig) -> str:
        if not self.api_key:
            raise AuthError(f"no API key: pass api_key or set ${self._api_key_env}")
        url = f"{self.BASE_URL}/{config.model_name}:generateContent"
        payload = {
            "contents": [{"parts": [{"text": prompt}]}],
            "generationConfig": {
                "temperature": config.temperature,
                "maxOutputTokens": config.max_output_tokens,
            },
        }
        try:
            response = requests.post(
                url,
                params={"key": self.api_key},
                json=payload,
                timeout=config.request_timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"model request failed: {exc}") from exc
        if response.status_code in (401, 403):
            raise AuthError(f"model endpoint rejected credentials ({response.status_code})")
        if response.status_code == 429:
            raise QuotaExceeded("model endpoint rate limit hit")
        if response.status_code >= 400:
            raise TransportError(f"model endpoint returned {response.status_code}")
        body = response.json()
        try:
            parts = body["candidates"][0]["content"]["parts"]
        except (KeyError, IndexError) as exc:
            raise LlmError(f"unexpected model response shape: {exc}") from exc
        return "".join(part.get("text", "") for part in parts)


def complete(
    client: ModelClient,
    prompt: str,
    config: ModelConfig,
    *,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """One completion with exponential backoff on transient failures.

    Network attempts never exceed ``1 + config.retry_budget``. AuthError is
    not retryable. Oversized prompts fail before the first attempt.
    """
    if not prompt:
        raise ValueError("prompt must be non-empty")
    if len(prompt) > config.max_prompt_chars:
        raise PromptTooLarge(
            f"prompt is {len(prompt)} chars, budget {config.max_prompt_chars}"
        )
    last_error: Exception | None = None
    for attempt in range(1 + config.retry_budget):
        try:
            return client.complete(prompt, config)
        except AuthError:
            raise
        except (TransportError, LlmError) as exc:
            last_error = exc
            if attempt < config.retry_budget:
                sleep(config.backoff_s * (2**attempt))
    raise LlmError(f"model call failed after {1 + config.retry_budget} attempts") from last_error


@dataclass(frozen=True)
class DocumentSchema:
    """A named validator turning parsed JSON into a domain object.

    ``validate`` raises SchemaViolation (with a path) on any defect.
    """

    name: str
    validate: Callable[[Any], Any] = field(repr=False)


_FENCE_RE = re.compile(r"```(?:json|JSON)?\s*\n(.*?)```", re.DOTALL)


def extract_json_document(text: str) -> str:
    """Pull the JSON object out of a model response.

    Tolerates code fences and prose around the document; raises
    SchemaViolation when no braced object can be found.
    """
    fenced = _FENCE_RE.search(text)
    if fenced:
        text = fenced.group(1)
    start = text.find("{")
    if start < 0:
        raise SchemaViolation("no JSON object in response", path="$")
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise SchemaViolation("unterminated JSON object in response", path="$")


def parse_json_document(text: str) -> Any:
    raw = extract_json_document(text)
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc.msg}", path="$") from exc


REPAIR_TEMPLATE = (
    "Your previous reply failed validation.\n"
    "Validation error: {error}\n\n"
    "Original request:\n{prompt}\n\n"
    "Your previous reply:\n{reply}\n\n"
    "Reply again with ONLY the corrected JSON object. No prose, no code fences."
)


def complete_structured(
    client: ModelClient,
    prompt: str,
    schema: DocumentSchema,
    config: ModelConfig,
    *,
    max_attempts: int = 2,
    sleep: Callable[[float], None] = time.sleep,
) -> Any:
    """Completion validated against ``schema`` with bounded repair.

    Each failed validation triggers one repair re-prompt embedding the
    validation error; total model calls never exceed ``max_attempts``.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    current_prompt = prompt
    last_violation: SchemaViolation | None = None
    for _ in range(max_attempts):
        reply = complete(client, current_prompt, config, sleep=sleep)
        try:
            return schema.validate(parse_json_document(reply))
        except SchemaViolation as violation:
            last_violation = violation
            current_prompt = REPAIR_TEMPLATE.format(
                error=violation, prompt=prompt, reply=reply
            )
    assert last_violation is not None
    raise last_violation
