"""Engagement-comment agent: corpus grounding, rubric self-evaluation, improvement loop."""

from .corpus import Article, Corpus, load_corpus, render_corpus
from .loop import (
    CommentDraft,
    InstructionLevel,
    PromptConfig,
    PromptTemplates,
    find_urls,
    generate_comment,
    improve_comment,
    run_bender_loop,
    self_evaluate,
    truncate_at_sentence,
)
from .rubric import (
    CRITERION_DEFINITIONS,
    RubricCriterion,
    RubricEvaluation,
    overall_score,
    rubric_text,
    validate_rubric_document,
)

__all__ = [
    "Article",
    "Corpus",
    "load_corpus",
    "render_corpus",
    "CommentDraft",
    "InstructionLevel",
    "PromptConfig",
    "PromptTemplates",
    "find_urls",
    "generate_comment",
    "improve_comment",
    "run_bender_loop",
    "self_evaluate",
    "truncate_at_sentence",
    "CRITERION_DEFINITIONS",
    "RubricCriterion",
    "RubricEvaluation",
    "overall_score",
    "rubric_text",
    "validate_rubric_document",
]
