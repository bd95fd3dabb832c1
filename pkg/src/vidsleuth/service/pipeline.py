"""Full-run orchestration: ingest -> claims -> retrieval -> verdict -> bender.

Each stage failure marks the run FAILED naming the stage; artifacts produced
before the failure stay on disk (a report survives a comment-stage failure).
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from .. import llm
from ..bender import (
    CommentDraft,
    Corpus,
    PromptConfig,
    PromptTemplates,
    RubricEvaluation,
    load_corpus,
    overall_score,
    run_bender_loop,
)
from ..claims import dedupe_claims, extract_claims
from ..errors import AllRetrieversFailed, CommentsDisabled, VidsleuthError
from ..ingest import PlatformClient, normalize_transcript, parse_caption_track
from ..ingest.models import UserComment, VideoMetadata
from ..net import RecordingTransport, ReplayTransport, RequestsTransport
from ..retrieval import (
    ClaimReviewRetriever,
    EncyclopediaRetriever,
    EvidenceBundle,
    ResponseCache,
    Retriever,
    WebSearchRetriever,
    gather_evidence,
)
from ..verdict import ASSESSMENT_WORKERS, assess_claim, build_report, render_markdown, render_text
from .config import AppConfig
from .runs import RunRecord, RunStatus, RunStore

logger = logging.getLogger(__name__)


@dataclass
class PipelineDeps:
    platform: PlatformClient
    model: llm.ModelClient
    retrievers: Sequence[Retriever]
    cache: ResponseCache | None = None
    templates: PromptTemplates | None = None
    corpus_resolver: Callable[[str | None], Corpus] = lambda theme: Corpus(
        theme=theme or "", articles=(), total_chars=0
    )
    model_config: llm.ModelConfig | None = None


@dataclass(frozen=True)
class RunOptions:
    theme: str | None = None
    prompt_config: PromptConfig = field(default_factory=PromptConfig)
    retrieval_k: int = 3
    comment_limit: int = 50
    preferred_language: str = "en"
    run_bender: bool = True


def _dump_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def _comment_to_json(comment: UserComment) -> dict[str, Any]:
    return {
        "comment_id": comment.comment_id,
        "author": comment.author,
        "text": comment.text,
        "like_count": comment.like_count,
        "reply_to": comment.reply_to,
    }


def _metadata_to_json(metadata: VideoMetadata) -> dict[str, Any]:
    return {
        "video_id": metadata.video_id,
        "title": metadata.title,
        "channel_name": metadata.channel_name,
        "channel_id": metadata.channel_id,
        "thumbnail_url": metadata.thumbnail_url,
        "published_at": metadata.published_at.isoformat() if metadata.published_at else None,
    }


def metadata_from_json(raw: dict[str, Any]) -> VideoMetadata:
    from datetime import datetime

    return VideoMetadata(
        video_id=raw["video_id"],
        title=raw["title"],
        channel_name=raw["channel_name"],
        channel_id=raw["channel_id"],
        thumbnail_url=raw.get("thumbnail_url"),
        published_at=datetime.fromisoformat(raw["published_at"])
        if raw.get("published_at")
        else None,
    )


def comments_from_json(rows: list[dict[str, Any]]) -> list[UserComment]:
    return [
        UserComment(
            comment_id=row["comment_id"],
            author=row["author"],
            text=row["text"],
            like_count=row.get("like_count", 0),
            reply_to=row.get("reply_to"),
        )
        for row in rows
    ]


def persist_draft(
    store: RunStore,
    record: RunRecord,
    draft: CommentDraft,
    evaluations: list[RubricEvaluation],
) -> str:
    """Write a draft (plus its evaluations) under the run; returns the draft id."""
    drafts_dir = store.run_dir(record.run_id) / "drafts"
    drafts_dir.mkdir(parents=True, exist_ok=True)
    index = len(record.draft_refs) + 1
    draft_id = f"{record.run_id}-d{index}"
    payload = {
        "draft_id": draft_id,
        "run_id": record.run_id,
        "text": draft.text,
        "cited_urls": list(draft.cited_urls),
        "target_comment_id": draft.target_comment_id,
        "generation": draft.generation,
        "approved": False,
        "evaluations": [e.to_json() for e in evaluations],
        "overall_scores": [overall_score(e) for e in evaluations],
    }
    _dump_json(drafts_dir / f"{draft_id}.json", payload)
    store.attach_draft(record, f"drafts/{draft_id}.json")
    return draft_id


def run_id_of_draft(draft_id: str) -> str:
    run_id, _, _ = draft_id.rpartition("-d")
    if not run_id:
        raise ValueError(f"malformed draft id {draft_id!r}")
    return run_id


def load_draft(store: RunStore, draft_id: str) -> dict[str, Any]:
    path = store.run_dir(run_id_of_draft(draft_id)) / "drafts" / f"{draft_id}.json"
    if not path.exists():
        from ..errors import NotFound

        raise NotFound(f"draft {draft_id} not found")
    return json.loads(path.read_text(encoding="utf-8"))


def update_draft(store: RunStore, draft_id: str, **changes: Any) -> dict[str, Any]:
    payload = load_draft(store, draft_id)
    payload.update(changes)
    path = store.run_dir(run_id_of_draft(draft_id)) / "drafts" / f"{draft_id}.json"
    _dump_json(path, payload)
    return payload


def run_pipeline(
    video_id: str,
    deps: PipelineDeps,
    store: RunStore,
    options: RunOptions = RunOptions(),
    *,
    run_id: str | None = None,
    record: RunRecord | None = None,
) -> RunRecord:
    """Drive every stage for one video, persisting artifacts along the way."""
    if record is None:
        record = store.create(video_id, theme=options.theme, run_id=run_id)
    run_dir = store.run_dir(record.run_id)
    store.transition(record, RunStatus.RUNNING)
    stage = "ingest"
    try:
        with ThreadPoolExecutor(max_workers=3) as pool:
            metadata_future = pool.submit(deps.platform.fetch_video_metadata, video_id)
            track_future = pool.submit(
                deps.platform.fetch_caption_track, video_id, options.preferred_language
            )
            comments_future = pool.submit(
                deps.platform.fetch_comments, video_id, options.comment_limit
            )
        metadata = metadata_future.result()
        track = track_future.result()
        try:
            comments = comments_future.result()
        except CommentsDisabled:
            logger.info("comments disabled for %s; continuing with none", video_id)
            comments = []
        cues = parse_caption_track(track.raw, track.format)
        transcript = normalize_transcript(
            cues, deps.model, deps.model_config, language=track.language
        )
        _dump_json(run_dir / "metadata.json", _metadata_to_json(metadata))
        _dump_json(run_dir / "comments.json", [_comment_to_json(c) for c in comments])
        _dump_json(
            run_dir / "transcript.json",
            {
                "text": transcript.text,
                "source_cue_count": transcript.source_cue_count,
                "language": transcript.language,
                "degraded_language_choice": track.degraded,
                "auto_generated": track.auto_generated,
            },
        )

        stage = "claims"
        claim_set = dedupe_claims(
            extract_claims(transcript, metadata, deps.model, model_config=deps.model_config)
        )
        _dump_json(run_dir / "claims.json", claim_set.to_document())

        stage = "retrieval"
        bundles_by_claim: dict[int, list[EvidenceBundle]] = {c.claim_id: [] for c in claim_set.claims}
        evidence_log: list[dict[str, Any]] = []
        for question in claim_set.questions:
            try:
                bundle = gather_evidence(
                    question, deps.retrievers, options.retrieval_k, cache=deps.cache
                )
            except AllRetrieversFailed as exc:
                logger.warning("all retrievers failed for question %d: %s", question.question_id, exc)
                bundle = EvidenceBundle(
                    question_id=question.question_id,
                    items=(),
                    retriever_errors=(("all", str(exc)),),
                )
            bundles_by_claim[question.claim_id].append(bundle)
            evidence_log.append(
                {
                    "question_id": question.question_id,
                    "question": question.text,
                    "claim_id": question.claim_id,
                    "items": [item.to_json() for item in bundle.items],
                    "retriever_errors": [list(e) for e in bundle.retriever_errors],
                }
            )
        _dump_json(run_dir / "evidence.json", evidence_log)

        stage = "verdict"
        with ThreadPoolExecutor(max_workers=ASSESSMENT_WORKERS) as pool:
            assessments = list(
                pool.map(
                    lambda claim: assess_claim(
                        claim,
                        claim_set.questions_for(claim.claim_id),
                        bundles_by_claim[claim.claim_id],
                        deps.model,
                        deps.model_config,
                    ),
                    claim_set.claims,
                )
            )
        report = build_report(assessments, metadata, generated_at=store.clock())
        _dump_json(run_dir / "report.json", report.to_json())
        (run_dir / "report.md").write_text(render_markdown(report), encoding="utf-8")
        (run_dir / "report.txt").write_text(render_text(report), encoding="utf-8")
        store.attach_report(record, "report.json")
        store.transition(record, RunStatus.REPORT_READY)
    except Exception as exc:
        logger.exception("run %s failed at stage %s", record.run_id, stage)
        store.transition(record, RunStatus.FAILED, error=f"{stage}: {type(exc).__name__}: {exc}")
        return record

    if not options.run_bender:
        return record

    stage = "bender"
    try:
        corpus = deps.corpus_resolver(options.theme)
        report_text = (run_dir / "report.txt").read_text(encoding="utf-8")
        draft, evaluations = run_bender_loop(
            report_text,
            corpus,
            metadata,
            comments,
            None,
            options.prompt_config,
            deps.model,
            deps.model_config,
            deps.templates,
        )
        persist_draft(store, record, draft, evaluations)
        store.transition(record, RunStatus.COMMENT_READY)
    except Exception as exc:
        # The report stays downloadable; only the comment stage failed.
        logger.exception("run %s failed at stage %s", record.run_id, stage)
        store.transition(record, RunStatus.FAILED, error=f"{stage}: {type(exc).__name__}: {exc}")
    return record


def regenerate_draft(
    record: RunRecord,
    deps: PipelineDeps,
    store: RunStore,
    options: RunOptions,
    *,
    target_comment_id: str | None = None,
) -> str:
    """Produce a fresh draft for an existing run (general or reply mode)."""
    run_dir = store.run_dir(record.run_id)
    report_path = run_dir / "report.txt"
    if not report_path.exists():
        raise VidsleuthError(f"run {record.run_id} has no report to ground a draft in")
    metadata = metadata_from_json(
        json.loads((run_dir / "metadata.json").read_text(encoding="utf-8"))
    )
    comments = comments_from_json(
        json.loads((run_dir / "comments.json").read_text(encoding="utf-8"))
    )
    target = None
    if target_comment_id is not None:
        target = next((c for c in comments if c.comment_id == target_comment_id), None)
        if target is None:
            from ..errors import NotFound

            raise NotFound(f"comment {target_comment_id} not found in run {record.run_id}")
    draft, evaluations = run_bender_loop(
        report_path.read_text(encoding="utf-8"),
        deps.corpus_resolver(record.theme),
        metadata,
        comments,
        target,
        options.prompt_config,
        deps.model,
        deps.model_config,
        deps.templates,
    )
    return persist_draft(store, record, draft, evaluations)


def build_deps(
    config: AppConfig,
    *,
    replay_dir: str | Path | None = None,
    record_dir: str | Path | None = None,
) -> PipelineDeps:
    """Wire live, recording, or replaying dependencies from config."""
    platform_key: str | None = None
    if replay_dir is not None:
        transport = ReplayTransport(Path(replay_dir) / "http")
        model: llm.ModelClient = llm.ReplayModel(llm.RecordingStore(Path(replay_dir) / "model"))
        # Credentials are scrubbed from recorded request keys, so replay
        # runs work without real keys.
        platform_key = "replay"
    else:
        transport = RequestsTransport()
        model = llm.GeminiClient(api_key_env=config.model_api_key_env)
        if record_dir is not None:
            transport = RecordingTransport(transport, Path(record_dir) / "http")
            model = llm.RecordingModel(model, llm.RecordingStore(Path(record_dir) / "model"))

    retrievers: list[Retriever] = [
        WebSearchRetriever(
            transport,
            api_key_env=config.search_api_key_env,
            engine_id_env=config.search_engine_id_env,
        ),
        EncyclopediaRetriever(transport),
        ClaimReviewRetriever(transport, api_key_env=config.factcheck_api_key_env),
    ]
    cache = (
        ResponseCache(config.cache_dir, config.cache_ttl_s) if config.cache_dir else None
    )

    def corpus_resolver(theme: str | None) -> Corpus:
        if theme and theme in config.corpus_dirs:
            return load_corpus(config.corpus_dirs[theme], theme)
        return Corpus(theme=theme or "", articles=(), total_chars=0)

    templates = PromptTemplates.load(config.prompt_templates_dir)
    return PipelineDeps(
        platform=PlatformClient(
            transport, api_key=platform_key, api_key_env=config.platform_api_key_env
        ),
        model=model,
        retrievers=retrievers,
        cache=cache,
        templates=templates,
        corpus_resolver=corpus_resolver,
    )
