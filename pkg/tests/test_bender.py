"""Corpus loading, rubric scoring, comment loop behavior."""

import itertools
import json
from fractions import Fraction
from pathlib import Path

import pytest

from vidsleuth import llm
from vidsleuth.bender import (
    CommentDraft,
    Corpus,
    InstructionLevel,
    PromptConfig,
    RubricCriterion,
    RubricEvaluation,
    generate_comment,
    improve_comment,
    load_corpus,
    overall_score,
    render_corpus,
    run_bender_loop,
    self_evaluate,
    truncate_at_sentence,
)
from vidsleuth.bender.corpus import Article
from vidsleuth.errors import MissingFrontMatter, SchemaViolation
from vidsleuth.ingest.models import UserComment, VideoMetadata

CORPUS_DIR = Path(__file__).parent / "fixtures" / "corpus" / "manosphere"
METADATA = VideoMetadata(video_id="v1", title="Video Title", channel_name="Chan", channel_id="c")
REPORT_TEXT = (
    "FACT-CHECK REPORT\n[1] Claim: women only date tall men\n    Verdict: False\n"
    "    Source: https://report.example/evidence\n"
)
COMMENTS = [
    UserComment(comment_id="c1", author="alice", text="this video speaks the truth!"),
    UserComment(comment_id="c2", author="bob", text="finally someone says it"),
]


def _corpus():
    return load_corpus(CORPUS_DIR, "manosphere")


def _eval_json(score=2, feedback="fine"):
    return {
        criterion.value: {"score": score, "feedback": feedback}
        for criterion in RubricCriterion
    }


def _evaluation(scores):
    return RubricEvaluation(
        scores=dict(zip(RubricCriterion, scores)),
        feedback={criterion: f"note on {criterion.value}" for criterion in RubricCriterion},
    )


# --- corpus -------------------------------------------------------------------


def test_load_corpus_filename_order():
    corpus = _corpus()
    assert corpus.theme == "manosphere"
    assert [a.title for a in corpus.articles] == [
        "What dating-app data actually shows",
        "Strength differences, honestly measured",
    ]
    assert corpus.total_chars == sum(len(a.body) for a in corpus.articles)


def test_load_corpus_empty_directory_is_valid(tmp_path):
    corpus = load_corpus(tmp_path, "empty")
    assert corpus.articles == ()


def test_load_corpus_missing_url_raises(tmp_path):
    (tmp_path / "bad.md").write_text("---\ntitle: No URL\n---\nbody\n", encoding="utf-8")
    with pytest.raises(MissingFrontMatter) as excinfo:
        load_corpus(tmp_path, "x")
    assert excinfo.value.filename == "bad.md"


def test_render_corpus_respects_budget():
    articles = tuple(
        Article(title=f"t{i}", url=f"https://u.example/{i}", body="x" * 400) for i in range(5)
    )
    corpus = Corpus(theme="x", articles=articles, total_chars=2000)
    rendered = render_corpus(corpus, budget=1000)
    assert len(rendered) <= 1000
    assert "t0" in rendered
    assert "t4" not in rendered


# --- rubric arithmetic -----------------------------------------------------------


def test_overall_score_examples():
    assert overall_score(_evaluation([2] * 7)) == 100.0
    assert overall_score(_evaluation([0] * 7)) == 0.0
    assert overall_score(_evaluation([2, 1, 2, 2, 1, 2, 2])) == 85.7


def test_overall_score_exhaustive_against_fraction_oracle():
    for scores in itertools.product((0, 1, 2), repeat=7):
        expected = float(round(Fraction(sum(scores), 14) * 100, 1))
        assert overall_score(_evaluation(list(scores))) == expected


def test_rubric_requires_exactly_seven_criteria():
    scores = {criterion: 2 for criterion in RubricCriterion}
    feedback = {criterion: "ok" for criterion in RubricCriterion}
    missing_scores = dict(scores)
    del missing_scores[RubricCriterion.SHOWS_EMPATHY]
    with pytest.raises(SchemaViolation):
        RubricEvaluation(scores=missing_scores, feedback=feedback)


def test_rubric_rejects_out_of_range_score():
    scores = {criterion: 2 for criterion in RubricCriterion}
    scores[RubricCriterion.SPECIFIC] = 3
    with pytest.raises(SchemaViolation):
        RubricEvaluation(
            scores=scores, feedback={criterion: "ok" for criterion in RubricCriterion}
        )


# --- generation --------------------------------------------------------------------


def test_reply_mode_includes_target_and_sets_id():
    client = llm.MockModel("A reasonable reply.")
    target = COMMENTS[0]
    draft = generate_comment(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, target, PromptConfig(), client
    )
    assert draft.target_comment_id == "c1"
    assert target.text in client.prompts[0]
    assert draft.generation == 0


def test_general_mode_has_no_target():
    draft = generate_comment(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None, PromptConfig(),
        llm.MockModel("A general comment."),
    )
    assert draft.target_comment_id is None


def test_out_of_set_url_is_stripped_from_draft():
    reply = (
        "Check https://report.example/evidence and also "
        "https://fabricated.example/fake for details."
    )
    draft = generate_comment(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None, PromptConfig(), llm.MockModel(reply)
    )
    assert draft.cited_urls == ("https://report.example/evidence",)
    assert "fabricated.example" not in draft.text


def test_corpus_urls_are_allowed_citations():
    reply = "See https://research.example/strength for the honest numbers."
    draft = generate_comment(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None, PromptConfig(), llm.MockModel(reply)
    )
    assert draft.cited_urls == ("https://research.example/strength",)


def test_use_corpus_false_keeps_articles_out_of_prompt():
    client = llm.MockModel("ok")
    generate_comment(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None,
        PromptConfig(use_corpus=False), client,
    )
    assert "dating-app data" not in client.prompts[0]
    assert "Swipe-based platforms" not in client.prompts[0]


def test_use_report_false_keeps_report_out_of_prompt():
    client = llm.MockModel("ok")
    generate_comment(
        "", _corpus(), METADATA, COMMENTS, None,
        PromptConfig(use_report=False), client,
    )
    assert "FACT-CHECK REPORT" not in client.prompts[0]


def test_use_report_requires_report_text():
    with pytest.raises(ValueError):
        generate_comment(
            "  ", _corpus(), METADATA, COMMENTS, None, PromptConfig(), llm.MockModel("x")
        )


def test_one_shot_example_appears_when_configured():
    client = llm.MockModel("ok")
    config = PromptConfig(one_shot_example="an exemplary comment text")
    generate_comment(REPORT_TEXT, _corpus(), METADATA, COMMENTS, None, config, client)
    assert "an exemplary comment text" in client.prompts[0]


def test_high_level_instructions_are_shorter():
    detailed, high_level = llm.MockModel("ok"), llm.MockModel("ok")
    generate_comment(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None,
        PromptConfig(instruction_level=InstructionLevel.DETAILED), detailed,
    )
    generate_comment(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None,
        PromptConfig(instruction_level=InstructionLevel.HIGH_LEVEL), high_level,
    )
    assert len(high_level.prompts[0]) < len(detailed.prompts[0])


def test_hard_truncation_at_sentence_boundary():
    text = ("This is a sentence. " * 120).strip()
    truncated = truncate_at_sentence(text, cap=1500)
    assert len(truncated) <= 1500
    assert truncated.endswith(".")


# --- self-evaluation ------------------------------------------------------------------


def test_self_evaluate_all_twos():
    evaluation = self_evaluate(
        CommentDraft(text="draft"), REPORT_TEXT, _corpus(), METADATA,
        llm.MockModel(json.dumps(_eval_json(score=2))),
    )
    assert evaluation.is_perfect()
    assert all(evaluation.feedback[criterion] for criterion in RubricCriterion)


def test_self_evaluate_score_out_of_range_is_schema_violation():
    bad = _eval_json(score=2)
    bad["specific"]["score"] = 3
    with pytest.raises(SchemaViolation):
        self_evaluate(
            CommentDraft(text="d"), REPORT_TEXT, _corpus(), METADATA,
            llm.MockModel(json.dumps(bad)), max_attempts=1,
        )


def test_self_evaluate_missing_criterion_named():
    bad = _eval_json()
    del bad["shows_empathy"]
    with pytest.raises(SchemaViolation) as excinfo:
        self_evaluate(
            CommentDraft(text="d"), REPORT_TEXT, _corpus(), METADATA,
            llm.MockModel(json.dumps(bad)), max_attempts=1,
        )
    assert "shows_empathy" in str(excinfo.value)


def test_self_evaluate_prompt_embeds_rubric_and_draft():
    client = llm.MockModel(json.dumps(_eval_json()))
    self_evaluate(CommentDraft(text="the draft body"), REPORT_TEXT, _corpus(), METADATA, client)
    prompt = client.prompts[0]
    assert "the draft body" in prompt
    for criterion in RubricCriterion:
        assert criterion.value in prompt


# --- improvement -----------------------------------------------------------------------


def test_improve_increments_generation_and_carries_feedback():
    client = llm.MockModel("Improved text.")
    evaluation = _evaluation([1] * 7)
    draft = CommentDraft(text="first try", generation=0)
    improved = improve_comment(draft, evaluation, REPORT_TEXT, _corpus(), METADATA, client)
    assert improved.generation == 1
    prompt = client.prompts[0]
    assert "first try" in prompt
    for criterion in RubricCriterion:
        assert evaluation.feedback[criterion] in prompt
        assert f"{evaluation.scores[criterion]}/2" in prompt


def test_improve_works_even_on_a_perfect_evaluation():
    # The loop driver skips this call on all-2s; the operation itself still works.
    improved = improve_comment(
        CommentDraft(text="fine already", generation=1),
        _evaluation([2] * 7),
        REPORT_TEXT, _corpus(), METADATA, llm.MockModel("Polished."),
    )
    assert improved.generation == 2


# --- loop ---------------------------------------------------------------------------------


def _loop_client(eval_scores_per_pass):
    """Mock that answers generation prompts with text and evaluation prompts with JSON."""
    state = {"evals": 0}

    def respond(prompt):
        if "score" in prompt.lower() and "criterion" in prompt.lower():
            scores = eval_scores_per_pass[min(state["evals"], len(eval_scores_per_pass) - 1)]
            state["evals"] += 1
            return json.dumps(_eval_json(score=scores))
        return f"comment body v{state['evals']}"

    return llm.MockModel(respond)


def test_loop_disabled_self_eval_returns_generation_zero():
    config = PromptConfig(self_eval_enabled=False, max_improvement_passes=0)
    draft, evaluations = run_bender_loop(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None, config, llm.MockModel("text")
    )
    assert draft.generation == 0
    assert evaluations == []


def test_loop_early_stop_on_perfect_first_pass():
    config = PromptConfig(max_improvement_passes=3)
    draft, evaluations = run_bender_loop(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None, config, _loop_client([2])
    )
    assert len(evaluations) == 1
    assert draft.generation == 0


def test_loop_exhausts_cap_when_never_satisfied():
    config = PromptConfig(max_improvement_passes=2)
    draft, evaluations = run_bender_loop(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None, config, _loop_client([1])
    )
    assert len(evaluations) == 2
    assert draft.generation == 2


def test_loop_stops_midway_when_satisfied():
    config = PromptConfig(max_improvement_passes=3)
    draft, evaluations = run_bender_loop(
        REPORT_TEXT, _corpus(), METADATA, COMMENTS, None, config, _loop_client([1, 2])
    )
    assert len(evaluations) == 2
    assert draft.generation == 1


def test_prompt_config_invariant():
    with pytest.raises(ValueError):
        PromptConfig(self_eval_enabled=True, max_improvement_passes=0)
