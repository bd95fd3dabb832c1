"""Claim extraction and question generation.

Identifies specific claims in a transcript and rewrites each as precise
questions suitable for fact-checking, behind a strict, versioned document
schema (``claims[].id``, ``claims[].text``, ``claims[].questions[]``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from . import llm
from .errors import EmptyTranscript, SchemaViolation
from .ingest.models import Transcript, VideoMetadata

DOCUMENT_VERSION = 1


@dataclass(frozen=True)
class Claim:
    claim_id: int
    text: str
    transcript_anchor: str | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("claim text must be non-empty")


@dataclass(frozen=True)
class VerifiableQuestion:
    question_id: int
    claim_id: int
    text: str

    def __post_init__(self) -> None:
        if not self.text.endswith("?"):
            raise ValueError(f"question must end with '?': {self.text!r}")


@dataclass(frozen=True)
class ClaimSet:
    video_id: str
    claims: tuple[Claim, ...]
    questions: tuple[VerifiableQuestion, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        ids = [claim.claim_id for claim in self.claims]
        if sorted(set(ids)) != ids:
            raise SchemaViolation("claim ids must be unique and ascending", path="claims")
        known = set(ids)
        for i, question in enumerate(self.questions):
            if question.claim_id not in known:
                raise SchemaViolation(
                    f"question {question.text!r} references unknown claim {question.claim_id}",
                    path=f"questions[{i}]",
                )

    def questions_for(self, claim_id: int) -> list[VerifiableQuestion]:
        return [q for q in self.questions if q.claim_id == claim_id]

    def to_document(self) -> dict[str, Any]:
        return {
            "version": DOCUMENT_VERSION,
            "video_id": self.video_id,
            "claims": [
                {
                    "id": claim.claim_id,
                    "text": claim.text,
                    **({"anchor": claim.transcript_anchor} if claim.transcript_anchor else {}),
                    "questions": [q.text for q in self.questions_for(claim.claim_id)],
                }
                for claim in self.claims
            ],
        }


def _claimset_from_parsed(parsed: Any, video_id: str = "") -> ClaimSet:
    if not isinstance(parsed, dict):
        raise SchemaViolation("document must be a JSON object", path="$")
    raw_claims = parsed.get("claims")
    if not isinstance(raw_claims, list) or not raw_claims:
        raise SchemaViolation("claims must be a non-empty array", path="claims")

    claims: list[Claim] = []
    questions: list[VerifiableQuestion] = []
    question_id = 1
    for i, raw in enumerate(raw_claims):
        path = f"claims[{i}]"
        if not isinstance(raw, dict):
            raise SchemaViolation("claim must be an object", path=path)
        claim_id = raw.get("id")
        if not isinstance(claim_id, int) or isinstance(claim_id, bool):
            raise SchemaViolation("id must be an integer", path=f"{path}.id")
        text = raw.get("text")
        if not isinstance(text, str) or not text.strip():
            raise SchemaViolation("text must be a non-empty string", path=f"{path}.text")
        anchor = raw.get("anchor")
        if anchor is not None and not isinstance(anchor, str):
            raise SchemaViolation("anchor must be a string", path=f"{path}.anchor")
        raw_questions = raw.get("questions")
        if not isinstance(raw_questions, list) or not raw_questions:
            raise SchemaViolation(
                "questions must be a non-empty array", path=f"{path}.questions"
            )
        claims.append(Claim(claim_id=claim_id, text=text.strip(), transcript_anchor=anchor))
        for j, raw_question in enumerate(raw_questions):
            qpath = f"{path}.questions[{j}]"
            if not isinstance(raw_question, str) or not raw_question.strip():
                raise SchemaViolation("question must be a non-empty string", path=qpath)
            if not raw_question.strip().endswith("?"):
                raise SchemaViolation("question must end with '?'", path=qpath)
            questions.append(
                VerifiableQuestion(
                    question_id=question_id, claim_id=claim_id, text=raw_question.strip()
                )
            )
            question_id += 1

    return ClaimSet(
        video_id=str(parsed.get("video_id") or video_id),
        claims=tuple(claims),
        questions=tuple(questions),
    )


def validate_claim_document(raw: str, *, video_id: str = "") -> ClaimSet:
    """Parse and strictly validate a claim document.

    Soft defects (code fences, prose around the object) are repaired by
    extraction; structural defects raise SchemaViolation naming the first
    failing path.
    """
    return _claimset_from_parsed(llm.parse_json_document(raw), video_id=video_id)


EXTRACTION_PROMPT = """\
You are a meticulous fact-checking analyst. Read the video transcript below and
pinpoint the specific claims it makes.

Rules:
- A claim is a factual assertion that can be checked against evidence. Prefer
  checkable factual assertions over pure value judgments or opinions.
- List at most {max_claims} claims, in the order they appear in the transcript.
- Quote or minimally paraphrase the claim as stated.
- Rewrite each claim as 1 to {max_questions} precise questions suitable for
  fact-checking. A compound claim becomes one question per checkable part.
  Every question must end with a question mark.

Video title: {title}
Channel: {channel}

Transcript:
{transcript}

Reply with ONLY a JSON object in exactly this shape:
{{"claims": [{{"id": 1, "text": "<the claim>", "anchor": "<short quoted span>", "questions": ["<question>?"]}}]}}
"""


@dataclass(frozen=True)
class ExtractionConfig:
    max_claims: int = 10
    max_questions_per_claim: int = 3
    repair_reprompts: int = 2


def extract_claims(
    transcript: Transcript,
    metadata: VideoMetadata,
    client: llm.ModelClient,
    config: ExtractionConfig = ExtractionConfig(),
    model_config: llm.ModelConfig | None = None,
) -> ClaimSet:
    """Extract claims + questions from a transcript via the model."""
    if not transcript.text.strip():
        raise EmptyTranscript("cannot extract claims from an empty transcript")
    model_config = model_config or llm.factual_config()

    def validate(parsed: Any) -> ClaimSet:
        claim_set = _claimset_from_parsed(parsed, video_id=metadata.video_id)
        if len(claim_set.claims) > config.max_claims:
            raise SchemaViolation(
                f"at most {config.max_claims} claims allowed, got {len(claim_set.claims)}",
                path="claims",
            )
        for i, claim in enumerate(claim_set.claims):
            count = len(claim_set.questions_for(claim.claim_id))
            if count > config.max_questions_per_claim:
                raise SchemaViolation(
                    f"at most {config.max_questions_per_claim} questions per claim, got {count}",
                    path=f"claims[{i}].questions",
                )
        return claim_set

    prompt = EXTRACTION_PROMPT.format(
        max_claims=config.max_claims,
        max_questions=config.max_questions_per_claim,
        title=metadata.title,
        channel=metadata.channel_name,
        transcript=transcript.text,
    )
    schema = llm.DocumentSchema(name="claim_document", validate=validate)
    return llm.complete_structured(
        client,
        prompt,
        schema,
        model_config,
        max_attempts=1 + config.repair_reprompts,
    )


def _normalized(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().casefold()


def dedupe_claims(claim_set: ClaimSet) -> ClaimSet:
    """Merge claims whose normalized text is identical.

    Questions of merged claims are re-parented onto the first occurrence;
    duplicate question texts within a merged claim collapse too. Order is
    preserved by first occurrence. Idempotent.
    """
    survivor_by_norm: dict[str, int] = {}
    remap: dict[int, int] = {}
    survivors: list[Claim] = []
    for claim in claim_set.claims:
        norm = _normalized(claim.text)
        if norm in survivor_by_norm:
            remap[claim.claim_id] = survivor_by_norm[norm]
        else:
            survivor_by_norm[norm] = claim.claim_id
            remap[claim.claim_id] = claim.claim_id
            survivors.append(claim)

    seen_questions: set[tuple[int, str]] = set()
    questions: list[VerifiableQuestion] = []
    for question in claim_set.questions:
        parent = remap[question.claim_id]
        dedupe_key = (parent, _normalized(question.text))
        if dedupe_key in seen_questions:
            continue
        seen_questions.add(dedupe_key)
        if parent == question.claim_id:
            questions.append(question)
        else:
            questions.append(
                VerifiableQuestion(
                    question_id=question.question_id, claim_id=parent, text=question.text
                )
            )

    return ClaimSet(
        video_id=claim_set.video_id, claims=tuple(survivors), questions=tuple(questions)
    )
