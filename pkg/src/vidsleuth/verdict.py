"""Claim assessment and fact-check report assembly.

Every claim gets one of five verdicts with reasoning and sources drawn only
from the evidence actually retrieved. The report object keeps Unsure
assessments (machine consumers need them); the human-facing Markdown
rendering suppresses them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable

from . import llm
from .claims import Claim, VerifiableQuestion
from .errors import SchemaViolation
from .ingest.models import VideoMetadata
from .retrieval import EvidenceBundle, SourceKind, normalize_url

logger = logging.getLogger(__name__)

ASSESSMENT_WORKERS = 4
INSUFFICIENT_EVIDENCE_REASONING = "insufficient evidence"
REPORT_SCHEMA_VERSION = 1


class Verdict(Enum):
    TRUE = "True"
    PARTLY_TRUE = "Partly True"
    PARTLY_FALSE = "Partly False"
    FALSE = "False"
    UNSURE = "Unsure"


_INDICATORS = {
    Verdict.TRUE: "🟢",
    Verdict.PARTLY_TRUE: "🟡",
    Verdict.PARTLY_FALSE: "🟠",
    Verdict.FALSE: "🔴",
}


def parse_verdict_label(label: str) -> Verdict:
    normalized = " ".join(label.replace("_", " ").split()).casefold()
    for verdict in Verdict:
        if verdict.value.casefold() == normalized:
            return verdict
    raise SchemaViolation(f"unknown verdict label {label!r}", path="verdict")


@dataclass(frozen=True)
class ClaimAssessment:
    claim: Claim
    verdict: Verdict
    reasoning: str
    sources: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.verdict is not Verdict.UNSURE and not self.sources:
            raise ValueError("sources must be non-empty unless the verdict is Unsure")

    def to_json(self) -> dict[str, Any]:
        return {
            "claim_id": self.claim.claim_id,
            "claim": self.claim.text,
            "verdict": self.verdict.value,
            "reasoning": self.reasoning,
            "sources": list(self.sources),
        }


@dataclass(frozen=True)
class FactCheckReport:
    metadata: VideoMetadata
    assessments: tuple[ClaimAssessment, ...]
    generated_at: datetime

    def __post_init__(self) -> None:
        ids = [a.claim.claim_id for a in self.assessments]
        if ids != sorted(ids):
            raise ValueError("assessments must be in claim order")

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "video_id": self.metadata.video_id,
            "title": self.metadata.title,
            "channel": self.metadata.channel_name,
            "generated_at": self.generated_at.isoformat(),
            "assessments": [a.to_json() for a in self.assessments],
        }

    def urls(self) -> set[str]:
        return {url for a in self.assessments for url in a.sources}


ASSESSMENT_PROMPT = """\
You are a careful fact-checker. Assess the claim below strictly against the
evidence provided — nothing else.

Claim: {claim}

Questions investigated:
{questions}

Evidence:
{evidence}

Pick exactly one verdict:
- "True": the evidence supports the claim as stated.
- "Partly True": the claim is a mix, but the accurate parts dominate.
- "Partly False": the claim is a mix, but the inaccurate parts dominate.
- "False": the evidence contradicts the claim.
- "Unsure": the evidence is insufficient or genuinely conflicting.

Cite only URLs that appear in the evidence above. Professional fact-check
ratings, where present, are the strongest signal.

Reply with ONLY a JSON object in exactly this shape:
{{"verdict": "<one of the five labels>", "reasoning": "<2-4 sentences>", "sources": ["<url>"]}}
"""


def _render_evidence(bundles: Iterable[EvidenceBundle]) -> str:
    lines: list[str] = []
    labels = {
        SourceKind.WEB_SEARCH: "web search",
        SourceKind.ENCYCLOPEDIA: "encyclopedia",
        SourceKind.CLAIM_REVIEW: "PROFESSIONAL FACT-CHECK",
    }
    for bundle in bundles:
        for item in bundle.items:
            rating = f" [rating: {item.review_rating}]" if item.review_rating else ""
            publisher = f", {item.publisher}" if item.publisher else ""
            lines.append(
                f"- ({labels[item.source_kind]}{publisher}){rating} {item.url}\n  {item.excerpt}"
            )
    return "\n".join(lines)


def assess_claim(
    claim: Claim,
    questions: list[VerifiableQuestion],
    bundles: list[EvidenceBundle],
    client: llm.ModelClient,
    model_config: llm.ModelConfig | None = None,
    *,
    max_attempts: int = 3,
) -> ClaimAssessment:
    """Assess one claim against the evidence gathered for its questions.

    With no evidence at all the verdict is Unsure without any model call.
    Cited URLs outside the evidence are stripped (and logged); if that
    leaves a non-Unsure verdict without sources, validation fails.
    """
    allowed: dict[str, str] = {}
    for bundle in bundles:
        for item in bundle.items:
            allowed.setdefault(normalize_url(item.url), item.url)

    if not allowed:
        return ClaimAssessment(
            claim=claim,
            verdict=Verdict.UNSURE,
            reasoning=INSUFFICIENT_EVIDENCE_REASONING,
            sources=(),
        )

    model_config = model_config or llm.factual_config()

    def validate(parsed: Any) -> ClaimAssessment:
        if not isinstance(parsed, dict):
            raise SchemaViolation("assessment must be a JSON object", path="$")
        raw_verdict = parsed.get("verdict")
        if not isinstance(raw_verdict, str):
            raise SchemaViolation("verdict must be a string", path="verdict")
        verdict = parse_verdict_label(raw_verdict)
        reasoning = parsed.get("reasoning")
        if not isinstance(reasoning, str) or not reasoning.strip():
            raise SchemaViolation("reasoning must be a non-empty string", path="reasoning")
        raw_sources = parsed.get("sources", [])
        if not isinstance(raw_sources, list) or any(
            not isinstance(s, str) for s in raw_sources
        ):
            raise SchemaViolation("sources must be an array of URLs", path="sources")
        kept: list[str] = []
        for url in raw_sources:
            canonical = allowed.get(normalize_url(url))
            if canonical is None:
                logger.warning(
                    "claim %d cited %s which is not in its evidence; stripped",
                    claim.claim_id,
                    url,
                )
                continue
            if canonical not in kept:
                kept.append(canonical)
        if not kept and verdict is not Verdict.UNSURE:
            raise SchemaViolation(
                "no cited source appears in the provided evidence", path="sources"
            )
        return ClaimAssessment(
            claim=claim, verdict=verdict, reasoning=reasoning.strip(), sources=tuple(kept)
        )

    prompt = ASSESSMENT_PROMPT.format(
        claim=claim.text,
        questions="\n".join(f"- {q.text}" for q in questions) or "- (none)",
        evidence=_render_evidence(bundles),
    )
    schema = llm.DocumentSchema(name="claim_assessment", validate=validate)
    return llm.complete_structured(client, prompt, schema, model_config, max_attempts=max_attempts)


def build_report(
    assessments: list[ClaimAssessment],
    metadata: VideoMetadata,
    *,
    generated_at: datetime | None = None,
) -> FactCheckReport:
    """Assemble the report; all verdicts are retained, including Unsure."""
    return FactCheckReport(
        metadata=metadata,
        assessments=tuple(assessments),
        generated_at=generated_at or datetime.now(timezone.utc),
    )


def render_markdown(report: FactCheckReport) -> str:
    """Human-facing Markdown: Unsure claims are excluded entirely."""
    meta = report.metadata
    lines = [f"# Fact-check: {meta.title}", ""]
    if meta.thumbnail_url:
        lines += [f"![video thumbnail]({meta.thumbnail_url})", ""]
    lines += [
        f"**Channel:** {meta.channel_name}  ",
        f"**Video:** `{meta.video_id}`  ",
        f"**Generated:** {report.generated_at.isoformat()}",
        "",
    ]
    visible = [a for a in report.assessments if a.verdict is not Verdict.UNSURE]
    if not visible:
        lines += ["_No checkable claims._", ""]
        return "\n".join(lines)
    for index, assessment in enumerate(visible, start=1):
        indicator = _INDICATORS[assessment.verdict]
        lines += [
            f"## {index}. {assessment.claim.text}",
            "",
            f"**Verdict:** {indicator} {assessment.verdict.value}",
            "",
            assessment.reasoning,
            "",
        ]
        if assessment.sources:
            lines.append("Sources:")
            lines += [f"- <{url}>" for url in assessment.sources]
            lines.append("")
    return "\n".join(lines)


def render_text(report: FactCheckReport) -> str:
    """Machine-facing plain text: deterministic, includes every assessment."""
    meta = report.metadata
    lines = [
        "FACT-CHECK REPORT",
        f"Video: {meta.title} ({meta.video_id})",
        f"Channel: {meta.channel_name}",
        f"Generated: {report.generated_at.isoformat()}",
        "",
    ]
    for assessment in report.assessments:
        lines += [
            f"[{assessment.claim.claim_id}] Claim: {assessment.claim.text}",
            f"    Verdict: {assessment.verdict.value}",
            f"    Reasoning: {assessment.reasoning}",
        ]
        for url in assessment.sources:
            lines.append(f"    Source: {url}")
        lines.append("")
    return "\n".join(lines)
