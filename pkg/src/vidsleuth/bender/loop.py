"""Comment generation with the self-evaluation / improvement loop."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path

from .. import llm
from ..ingest.models import UserComment, VideoMetadata
from .corpus import Corpus, render_corpus
from .rubric import RubricEvaluation, rubric_text, validate_rubric_document

logger = logging.getLogger(__name__)

SOFT_LENGTH_CAP = 1_200
HARD_LENGTH_CAP = 1_500

_URL_RE = re.compile(r"https?://[^\s<>()\[\]{}\"']+")


class InstructionLevel(Enum):
    HIGH_LEVEL = "high_level"
    DETAILED = "detailed"


@dataclass(frozen=True)
class PromptConfig:
    instruction_level: InstructionLevel = InstructionLevel.DETAILED
    one_shot_example: str | None = None
    use_report: bool = True
    use_corpus: bool = True
    self_eval_enabled: bool = True
    max_improvement_passes: int = 1

    def __post_init__(self) -> None:
        if self.max_improvement_passes < 0:
            raise ValueError("max_improvement_passes must be >= 0")
        if self.self_eval_enabled and self.max_improvement_passes < 1:
            raise ValueError("self-evaluation needs at least one improvement pass")


@dataclass(frozen=True)
class CommentDraft:
    text: str
    cited_urls: tuple[str, ...] = ()
    target_comment_id: str | None = None
    generation: int = 0

    def __post_init__(self) -> None:
        if self.generation < 0:
            raise ValueError("generation must be >= 0")


_TEMPLATE_NAMES = {
    "generate_detailed": "generate_detailed.txt",
    "generate_high_level": "generate_high_level.txt",
    "evaluate": "evaluate.txt",
    "improve": "improve.txt",
    "one_shot_example": "one_shot_example.txt",
}


@dataclass(frozen=True)
class PromptTemplates:
    generate_detailed: str
    generate_high_level: str
    evaluate: str
    improve: str
    one_shot_example: str

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "PromptTemplates":
        """Load templates from a directory, falling back to the packaged defaults."""
        values: dict[str, str] = {}
        packaged = resources.files("vidsleuth.bender") / "templates"
        for attr, filename in _TEMPLATE_NAMES.items():
            if directory is not None and (Path(directory) / filename).exists():
                values[attr] = (Path(directory) / filename).read_text(encoding="utf-8")
            else:
                values[attr] = (packaged / filename).read_text(encoding="utf-8")
        return cls(**values)


def find_urls(text: str) -> list[str]:
    """URLs in ``text``, in order, with trailing punctuation trimmed."""
    return [match.rstrip(".,;:!?") for match in _URL_RE.findall(text)]


def truncate_at_sentence(text: str, cap: int = HARD_LENGTH_CAP) -> str:
    if len(text) <= cap:
        return text
    head = text[:cap]
    cut = max(head.rfind(". "), head.rfind("! "), head.rfind("? "), head.rfind(".\n"))
    if cut > 0:
        return head[: cut + 1].rstrip()
    return head.rstrip()


def _enforce_citation_closure(text: str, allowed: set[str]) -> tuple[str, tuple[str, ...]]:
    """Strip URLs outside the allowed set from the text; return kept citations."""
    kept: list[str] = []
    for url in find_urls(text):
        if url in allowed:
            if url not in kept:
                kept.append(url)
        else:
            logger.warning("draft cited %s which is outside the allowed set; stripped", url)
            text = text.replace(url, "")
    return " ".join(text.split()), tuple(kept)


def _section(label: str, body: str) -> str:
    return f"\n{label}:\n{body}\n" if body else ""


def _render_comments(comments: list[UserComment]) -> str:
    return "\n".join(f"- {c.author}: {c.text}" for c in comments)


def _build_generation_prompt(
    report_text: str,
    corpus: Corpus,
    metadata: VideoMetadata,
    comments: list[UserComment],
    target: UserComment | None,
    config: PromptConfig,
    templates: PromptTemplates,
) -> str:
    template = (
        templates.generate_detailed
        if config.instruction_level is InstructionLevel.DETAILED
        else templates.generate_high_level
    )
    example = config.one_shot_example
    if target is not None:
        target_section = (
            f'\nReply directly to this comment by {target.author}:\n"{target.text}"\n'
            "Address their points first and engage them respectfully.\n"
        )
    else:
        target_section = "\nWrite a general comment, not a reply to anyone specific.\n"
    return template.format(
        video_title=metadata.title,
        channel=metadata.channel_name,
        example=_section("Here is an example of a comment that works well", example or ""),
        report=_section("Fact-check report", report_text if config.use_report else ""),
        corpus=_section(
            "Background articles", render_corpus(corpus) if config.use_corpus else ""
        ),
        comments=_section("Comments under the video", _render_comments(comments)),
        target=target_section,
    )


def _allowed_urls(report_text: str, corpus: Corpus) -> set[str]:
    return set(find_urls(report_text)) | corpus.urls()


def generate_comment(
    report_text: str,
    corpus: Corpus,
    metadata: VideoMetadata,
    comments: list[UserComment],
    target: UserComment | None,
    config: PromptConfig,
    client: llm.ModelClient,
    model_config: llm.ModelConfig | None = None,
    templates: PromptTemplates | None = None,
) -> CommentDraft:
    """First draft (generation 0), general or reply mode."""
    if config.use_report and not report_text.strip():
        raise ValueError("config.use_report is set but report_text is empty")
    templates = templates or PromptTemplates.load()
    model_config = model_config or llm.creative_config()
    prompt = _build_generation_prompt(
        report_text, corpus, metadata, comments, target, config, templates
    )
    response = llm.complete(client, prompt, model_config).strip()
    text, cited = _enforce_citation_closure(
        truncate_at_sentence(response), _allowed_urls(report_text, corpus)
    )
    return CommentDraft(
        text=text,
        cited_urls=cited,
        target_comment_id=target.comment_id if target else None,
        generation=0,
    )


def self_evaluate(
    draft: CommentDraft,
    report_text: str,
    corpus: Corpus,
    metadata: VideoMetadata,
    client: llm.ModelClient,
    model_config: llm.ModelConfig | None = None,
    templates: PromptTemplates | None = None,
    *,
    max_attempts: int = 3,
) -> RubricEvaluation:
    """Score the draft against all seven rubric criteria."""
    if not draft.text.strip():
        raise ValueError("cannot evaluate an empty draft")
    templates = templates or PromptTemplates.load()
    model_config = model_config or llm.factual_config()
    prompt = templates.evaluate.format(
        video_title=metadata.title,
        comment=draft.text,
        rubric=rubric_text(),
        report=_section("Fact-check report", report_text),
        corpus=_section("Background articles", render_corpus(corpus)),
    )
    schema = llm.DocumentSchema(name="rubric_evaluation", validate=validate_rubric_document)
    return llm.complete_structured(client, prompt, schema, model_config, max_attempts=max_attempts)


def _render_evaluation(evaluation: RubricEvaluation) -> str:
    return "\n".join(
        f"- {criterion.value}: score {evaluation.scores[criterion]}/2 — "
        f"{evaluation.feedback[criterion]}"
        for criterion in evaluation.scores
    )


def improve_comment(
    draft: CommentDraft,
    evaluation: RubricEvaluation,
    report_text: str,
    corpus: Corpus,
    metadata: VideoMetadata,
    client: llm.ModelClient,
    model_config: llm.ModelConfig | None = None,
    templates: PromptTemplates | None = None,
) -> CommentDraft:
    """Rewrite a draft using the rubric feedback; bumps the generation counter."""
    templates = templates or PromptTemplates.load()
    model_config = model_config or llm.creative_config()
    prompt = templates.improve.format(
        video_title=metadata.title,
        comment=draft.text,
        evaluation=_render_evaluation(evaluation),
        report=_section("Fact-check report", report_text),
        corpus=_section("Background articles", render_corpus(corpus)),
    )
    response = llm.complete(client, prompt, model_config).strip()
    text, cited = _enforce_citation_closure(
        truncate_at_sentence(response), _allowed_urls(report_text, corpus)
    )
    return replace(draft, text=text, cited_urls=cited, generation=draft.generation + 1)


def run_bender_loop(
    report_text: str,
    corpus: Corpus,
    metadata: VideoMetadata,
    comments: list[UserComment],
    target: UserComment | None,
    config: PromptConfig,
    client: llm.ModelClient,
    model_config: llm.ModelConfig | None = None,
    templates: PromptTemplates | None = None,
) -> tuple[CommentDraft, list[RubricEvaluation]]:
    """generate -> (evaluate -> improve) up to the configured pass cap.

    Stops early as soon as an evaluation scores 2 on all seven criteria.
    Returns the final draft plus every evaluation for audit.
    """
    draft = generate_comment(
        report_text, corpus, metadata, comments, target, config, client, model_config, templates
    )
    evaluations: list[RubricEvaluation] = []
    if not config.self_eval_enabled:
        return draft, evaluations
    for _ in range(config.max_improvement_passes):
        evaluation = self_evaluate(
            draft, report_text, corpus, metadata, client, model_config, templates
        )
        evaluations.append(evaluation)
        if evaluation.is_perfect():
            break
        draft = improve_comment(
            draft, evaluation, report_text, corpus, metadata, client, model_config, templates
        )
    return draft, evaluations
