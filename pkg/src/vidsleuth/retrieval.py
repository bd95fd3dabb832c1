"""Evidence retrieval: web search, encyclopedia, and fact-check review feeds.

Each backend is one pluggable retriever; a question fans out across all of
them and the results merge into a deduplicated bundle with provenance.
Failures in one source never abort the bundle.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Protocol, Sequence
from urllib.parse import parse_qsl, quote, urlencode, urlparse, urlunparse

from .claims import VerifiableQuestion
from .errors import AllRetrieversFailed, QuotaExceeded, TransportError
from .net import HttpTransport, RateLimiter, TransportResponse

logger = logging.getLogger(__name__)

MAX_EXCERPT_CHARS = 1_000
DEFAULT_PER_SOURCE_K = 3
CACHE_TTL_S = 24 * 3600


class SourceKind(Enum):
    WEB_SEARCH = "web_search"
    ENCYCLOPEDIA = "encyclopedia"
    CLAIM_REVIEW = "claim_review"


_KIND_ORDER = {kind: i for i, kind in enumerate(SourceKind)}


@dataclass(frozen=True)
class Evidence:
    url: str
    excerpt: str
    source_kind: SourceKind
    publisher: str | None = None
    review_rating: str | None = None

    def __post_init__(self) -> None:
        parsed = urlparse(self.url)
        if not (parsed.scheme and parsed.netloc):
            raise ValueError(f"invalid evidence URL: {self.url!r}")
        if not self.excerpt:
            raise ValueError("evidence excerpt must be non-empty")
        if len(self.excerpt) > MAX_EXCERPT_CHARS:
            raise ValueError(f"excerpt longer than {MAX_EXCERPT_CHARS} chars")
        if self.review_rating is not None and self.source_kind is not SourceKind.CLAIM_REVIEW:
            raise ValueError("review_rating only applies to claim-review evidence")

    def to_json(self) -> dict[str, Any]:
        return {
            "url": self.url,
            "excerpt": self.excerpt,
            "source_kind": self.source_kind.value,
            "publisher": self.publisher,
            "review_rating": self.review_rating,
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "Evidence":
        return cls(
            url=raw["url"],
            excerpt=raw["excerpt"],
            source_kind=SourceKind(raw["source_kind"]),
            publisher=raw.get("publisher"),
            review_rating=raw.get("review_rating"),
        )


@dataclass(frozen=True)
class EvidenceBundle:
    question_id: int
    items: tuple[Evidence, ...] = field(default_factory=tuple)
    retriever_errors: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        normalized = [normalize_url(item.url) for item in self.items]
        if len(set(normalized)) != len(normalized):
            raise ValueError("bundle contains duplicate normalized URLs")


def _excerpt(text: str) -> str:
    """Truncate to the excerpt budget; never pad."""
    return text[:MAX_EXCERPT_CHARS]


def normalize_url(url: str) -> str:
    """Deterministic URL normalization used for dedup.

    Lowercases scheme and host, drops the fragment and utm_* tracking
    parameters, and strips any trailing slash from the path.
    """
    parsed = urlparse(url)
    query = urlencode(
        [(k, v) for k, v in parse_qsl(parsed.query, keep_blank_values=True)
         if not k.lower().startswith("utm_")]
    )
    return urlunparse(
        (
            parsed.scheme.lower(),
            parsed.netloc.lower(),
            parsed.path.rstrip("/"),
            parsed.params,
            query,
            "",
        )
    )


class Retriever(Protocol):
    kind: SourceKind

    def search(self, question: str, k: int) -> list[Evidence]: ...


# One limiter per backend so concurrent questions still respect quotas.
_rate_limiters: dict[SourceKind, RateLimiter] = {kind: RateLimiter(0.0) for kind in SourceKind}


def configure_rate_limit(kind: SourceKind, min_interval_s: float) -> None:
    _rate_limiters[kind] = RateLimiter(min_interval_s)


def _acquire(kind: SourceKind) -> None:
    _rate_limiters[kind].acquire()


def _raise_for_quota(response: TransportResponse, backend: str) -> None:
    if response.status == 429:
        raise QuotaExceeded(f"{backend} rate limit hit")
    if response.status == 403:
        try:
            errors = response.json().get("error", {}).get("errors", [])
            reason = errors[0].get("reason", "") if errors else ""
        except Exception:
            reason = ""
        if "limit" in reason.lower() or "quota" in reason.lower():
            raise QuotaExceeded(f"{backend} quota exceeded ({reason})")
        raise TransportError(f"{backend} returned 403 ({reason})")
    if response.status >= 400:
        raise TransportError(f"{backend} returned {response.status}")


class WebSearchRetriever:
    """Programmable web search (custom-search JSON API wire format)."""

    kind = SourceKind.WEB_SEARCH
    ENDPOINT = "https://www.googleapis.com/customsearch/v1"

    def __init__(
        self,
        transport: HttpTransport,
        api_key: str | None = None,
        engine_id: str | None = None,
        *,
        api_key_env: str = "SEARCH_API_KEY",
        engine_id_env: str = "SEARCH_ENGINE_ID",
    ):
        self.transport = transport
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env, "")
        self.engine_id = engine_id if engine_id is not None else os.environ.get(engine_id_env, "")

    def search(self, question: str, k: int) -> list[Evidence]:
        if k < 1:
            raise ValueError("k must be >= 1")
        _acquire(self.kind)
        response = self.transport.get(
            self.ENDPOINT,
            {"key": self.api_key, "cx": self.engine_id, "q": question, "num": str(min(k, 10))},
        )
        _raise_for_quota(response, "web search")
        results = []
        for item in response.json().get("items", [])[:k]:
            url, snippet = item.get("link"), item.get("snippet")
            if not url or not snippet:
                continue
            results.append(
                Evidence(
                    url=url,
                    excerpt=_excerpt(snippet),
                    source_kind=self.kind,
                    publisher=item.get("displayLink"),
                )
            )
        return results


class EncyclopediaRetriever:
    """Encyclopedia lookups via the MediaWiki action API.

    A disambiguation page is never returned as evidence: the first concrete
    page that follows takes its place, flagged in the publisher field.
    """

    kind = SourceKind.ENCYCLOPEDIA

    def __init__(self, transport: HttpTransport, *, base_url: str = "https://en.wikipedia.org"):
        self.transport = transport
        self.api_url = f"{base_url}/w/api.php"
        self.page_base = f"{base_url}/wiki"

    def _page_extract(self, title: str) -> tuple[str, bool]:
        response = self.transport.get(
            self.api_url,
            {
                "action": "query",
                "prop": "extracts|pageprops",
                "ppprop": "disambiguation",
                "exintro": "1",
                "explaintext": "1",
                "redirects": "1",
                "format": "json",
                "titles": title,
            },
        )
        _raise_for_quota(response, "encyclopedia")
        pages = response.json().get("query", {}).get("pages", {})
        for page in pages.values():
            is_disambiguation = "disambiguation" in page.get("pageprops", {})
            return page.get("extract", "") or "", is_disambiguation
        return "", False

    def search(self, question: str, k: int) -> list[Evidence]:
        if k < 1:
            raise ValueError("k must be >= 1")
        _acquire(self.kind)
        response = self.transport.get(
            self.api_url,
            {
                "action": "query",
                "list": "search",
                "srsearch": question,
                "srlimit": str(k + 3),
                "format": "json",
            },
        )
        _raise_for_quota(response, "encyclopedia")
        titles = [
            hit["title"]
            for hit in response.json().get("query", {}).get("search", [])
            if hit.get("title")
        ]
        results: list[Evidence] = []
        skipped_disambiguation = False
        for title in titles:
            if len(results) >= k:
                break
            extract, is_disambiguation = self._page_extract(title)
            if is_disambiguation:
                skipped_disambiguation = True
                continue
            if not extract:
                continue
            publisher = "Wikipedia (via disambiguation)" if skipped_disambiguation else "Wikipedia"
            skipped_disambiguation = False
            results.append(
                Evidence(
                    url=f"{self.page_base}/{quote(title.replace(' ', '_'), safe='():,!')}",
                    excerpt=_excerpt(extract),
                    source_kind=self.kind,
                    publisher=publisher,
                )
            )
        return results


class ClaimReviewRetriever:
    """Professional fact-check lookups (ClaimReview search API wire format)."""

    kind = SourceKind.CLAIM_REVIEW
    ENDPOINT = "https://factchecktools.googleapis.com/v1alpha1/claims:search"

    def __init__(
        self,
        transport: HttpTransport,
        api_key: str | None = None,
        *,
        api_key_env: str = "FACTCHECK_API_KEY",
    ):
        self.transport = transport
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env, "")

    def search(self, question: str, k: int) -> list[Evidence]:
        if k < 1:
            raise ValueError("k must be >= 1")
        _acquire(self.kind)
        response = self.transport.get(
            self.ENDPOINT,
            {"query": question, "pageSize": str(k), "key": self.api_key},
        )
        _raise_for_quota(response, "claim review")
        results: list[Evidence] = []
        for claim in response.json().get("claims", [])[:k]:
            reviews = claim.get("claimReview") or []
            if not reviews:
                continue
            review = reviews[0]
            url = review.get("url")
            if not url:
                continue
            rating = review.get("textualRating")
            claim_text = claim.get("text", "")
            excerpt = claim_text + (f" — rated: {rating}" if rating else "")
            if not excerpt.strip():
                continue
            results.append(
                Evidence(
                    url=url,
                    excerpt=_excerpt(excerpt),
                    source_kind=self.kind,
                    publisher=(review.get("publisher") or {}).get("name"),
                    review_rating=rating,
                )
            )
        return results


class ResponseCache:
    """Content-addressed per-(source, question, k) result cache with TTL."""

    def __init__(
        self,
        directory: str | Path,
        ttl_s: float = CACHE_TTL_S,
        *,
        clock: Callable[[], float] = time.time,
    ):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.ttl_s = ttl_s
        self._clock = clock
        self._write_lock = threading.Lock()

    def _path(self, kind: SourceKind, question: str, k: int) -> Path:
        digest = hashlib.sha256(f"{kind.value}|{question}|{k}".encode("utf-8")).hexdigest()
        return self.directory / f"{digest}.json"

    def get(self, kind: SourceKind, question: str, k: int) -> list[Evidence] | None:
        path = self._path(kind, question, k)
        if not path.exists():
            return None
        payload = json.loads(path.read_text(encoding="utf-8"))
        if self.ttl_s >= 0 and self._clock() - payload["stored_at"] > self.ttl_s:
            return None
        return [Evidence.from_json(item) for item in payload["items"]]

    def put(self, kind: SourceKind, question: str, k: int, items: list[Evidence]) -> None:
        path = self._path(kind, question, k)
        payload = {
            "stored_at": self._clock(),
            "items": [item.to_json() for item in items],
        }
        with self._write_lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(payload, indent=2), encoding="utf-8")
            tmp.rename(path)


def _search_one(
    retriever: Retriever, question: str, k: int, cache: ResponseCache | None
) -> list[Evidence]:
    if cache is not None:
        cached = cache.get(retriever.kind, question, k)
        if cached is not None:
            return cached
    items = retriever.search(question, k)
    if cache is not None:
        cache.put(retriever.kind, question, k, items)
    return items


def gather_evidence(
    question: VerifiableQuestion,
    retrievers: Sequence[Retriever],
    k: int = DEFAULT_PER_SOURCE_K,
    *,
    cache: ResponseCache | None = None,
) -> EvidenceBundle:
    """Fan a question out across every retriever and merge the results.

    Per-source failures are recorded on the bundle, never raised — unless
    every source failed, which raises AllRetrieversFailed.
    """
    if not retrievers:
        raise ValueError("at least one retriever must be configured")

    def run(retriever: Retriever) -> list[Evidence] | Exception:
        try:
            return _search_one(retriever, question.text, k, cache)
        except Exception as exc:  # degraded mode: record, don't abort
            return exc

    with ThreadPoolExecutor(max_workers=len(retrievers)) as pool:
        outcomes = list(pool.map(run, retrievers))

    errors: list[tuple[str, str]] = []
    collected: list[tuple[int, int, Evidence]] = []
    for retriever, outcome in zip(retrievers, outcomes):
        if isinstance(outcome, Exception):
            summary = f"{type(outcome).__name__}: {outcome}"
            logger.warning("retriever %s failed: %s", retriever.kind.value, summary)
            errors.append((retriever.kind.value, summary))
            continue
        for rank, item in enumerate(outcome):
            collected.append((_KIND_ORDER[item.source_kind], rank, item))

    if errors and len(errors) == len(retrievers):
        raise AllRetrieversFailed(
            f"every evidence source failed for question {question.question_id}: {errors}"
        )

    collected.sort(key=lambda entry: (entry[0], entry[1]))
    seen: set[str] = set()
    items: list[Evidence] = []
    for _, _, item in collected:
        normalized = normalize_url(item.url)
        if normalized in seen:
            continue
        seen.add(normalized)
        items.append(item)

    return EvidenceBundle(
        question_id=question.question_id,
        items=tuple(items),
        retriever_errors=tuple(errors),
    )
