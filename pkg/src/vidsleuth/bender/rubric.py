"""The seven-criterion self-evaluation rubric (each scored 0, 1, or 2)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

from ..errors import SchemaViolation

SCORE_RANGE = (0, 1, 2)
MAX_TOTAL = 14  # seven criteria x top score 2


class RubricCriterion(Enum):
    NO_HALLUCINATION = "no_hallucination"
    RIGHT_STAND = "right_stand"
    SPECIFIC = "specific"
    SOUND_LOGICAL = "sound_logical"
    CITES_EVIDENCE = "cites_evidence"
    AVOIDS_TRUISMS = "avoids_truisms"
    SHOWS_EMPATHY = "shows_empathy"


CRITERION_DEFINITIONS: dict[RubricCriterion, str] = {
    RubricCriterion.NO_HALLUCINATION: (
        "Does Not Hallucinate: being an AI agent, the comment never pretends to be "
        "human or to have had human experiences, never makes up facts or sources, and "
        "relies strictly on the provided material for factual claims."
    ),
    RubricCriterion.RIGHT_STAND: (
        "Takes the 'Right' Stand: the comment does not blindly agree with, "
        "congratulate, or praise content that is false or harmful."
    ),
    RubricCriterion.SPECIFIC: (
        "Is Specific: the comment addresses specific points from the video and may "
        "quote short passages."
    ),
    RubricCriterion.SOUND_LOGICAL: (
        "Is Sound & Logical: the comment contains no logical fallacies or faulty "
        "phrasings."
    ),
    RubricCriterion.CITES_EVIDENCE: (
        "Cites Evidence: the comment leverages the URLs and sources from the "
        "fact-check report and themed corpus to back its position."
    ),
    RubricCriterion.AVOIDS_TRUISMS: (
        "Avoids Truisms: the comment does not resort to moralizing generalities or "
        "empty commonplaces."
    ),
    RubricCriterion.SHOWS_EMPATHY: (
        "Shows Empathy: the comment mirrors the tone and language of the video and "
        "other comments, and shows understanding of the temptation to fall for the "
        "claims discussed."
    ),
}


def rubric_text() -> str:
    """The rubric rendered for embedding into evaluation prompts."""
    return "\n".join(
        f"- {criterion.value}: {definition}"
        for criterion, definition in CRITERION_DEFINITIONS.items()
    )


@dataclass(frozen=True)
class RubricEvaluation:
    scores: Mapping[RubricCriterion, int]
    feedback: Mapping[RubricCriterion, str]

    def __post_init__(self) -> None:
        for mapping, what in ((self.scores, "score"), (self.feedback, "feedback")):
            missing = [c.value for c in RubricCriterion if c not in mapping]
            if missing:
                raise SchemaViolation(f"missing {what}", path=missing[0])
        for criterion, score in self.scores.items():
            if score not in SCORE_RANGE:
                raise SchemaViolation(
                    f"score must be 0, 1, or 2, got {score}", path=criterion.value
                )
        for criterion, text in self.feedback.items():
            if not str(text).strip():
                raise SchemaViolation("feedback must be non-empty", path=criterion.value)

    def total(self) -> int:
        return sum(self.scores[c] for c in RubricCriterion)

    def is_perfect(self) -> bool:
        return all(self.scores[c] == 2 for c in RubricCriterion)

    def to_json(self) -> dict[str, Any]:
        return {
            c.value: {"score": self.scores[c], "feedback": self.feedback[c]}
            for c in RubricCriterion
        }


def overall_score(evaluation: RubricEvaluation) -> float:
    """Average of the seven scores rendered as a percentage, one decimal."""
    return round(evaluation.total() / MAX_TOTAL * 100, 1)


def validate_rubric_document(parsed: Any) -> RubricEvaluation:
    """Schema validator for the model's self-evaluation output."""
    if not isinstance(parsed, dict):
        raise SchemaViolation("evaluation must be a JSON object", path="$")
    scores: dict[RubricCriterion, int] = {}
    feedback: dict[RubricCriterion, str] = {}
    for criterion in RubricCriterion:
        key = criterion.value
        entry = parsed.get(key)
        if entry is None:
            raise SchemaViolation("criterion missing from evaluation", path=key)
        if not isinstance(entry, dict):
            raise SchemaViolation("criterion entry must be an object", path=key)
        score = entry.get("score")
        if not isinstance(score, int) or isinstance(score, bool) or score not in SCORE_RANGE:
            raise SchemaViolation(f"score must be 0, 1, or 2, got {score!r}", path=f"{key}.score")
        text = entry.get("feedback")
        if not isinstance(text, str) or not text.strip():
            raise SchemaViolation("feedback must be a non-empty string", path=f"{key}.feedback")
        scores[criterion] = score
        feedback[criterion] = text.strip()
    return RubricEvaluation(scores=scores, feedback=feedback)
