"""Benchmark harness: two-class fact-verification protocol.

Loads FEVER / AVeriTeC records (dropping not-enough-info style labels), runs
any claim assessor over them, maps five-way verdicts onto Supports/Refutes
stances, and reports accuracy/precision/recall/F1 per slice, with and
without Unsure predictions.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Sequence

from . import llm
from .claims import Claim, VerifiableQuestion
from .errors import ParseError, SchemaViolation
from .retrieval import Retriever, ResponseCache, gather_evidence
from .verdict import ClaimAssessment, Verdict, assess_claim

EVALUATION_WORKERS = 4


class Dataset(Enum):
    FEVER = "FEVER"
    AVERITEC = "AVeriTeC"


class Stance(Enum):
    SUPPORTS = "SUPPORTS"
    REFUTES = "REFUTES"
    UNSURE = "UNSURE"


@dataclass(frozen=True)
class BenchmarkRecord:
    dataset: Dataset
    claim_text: str
    gold_stance: Stance

    def __post_init__(self) -> None:
        if self.gold_stance is Stance.UNSURE:
            raise ValueError("gold stance must be SUPPORTS or REFUTES after filtering")


def map_verdict_to_stance(verdict: Verdict) -> Stance:
    """True / Partly True support; False / Partly False refute; Unsure stays."""
    if verdict in (Verdict.TRUE, Verdict.PARTLY_TRUE):
        return Stance.SUPPORTS
    if verdict in (Verdict.FALSE, Verdict.PARTLY_FALSE):
        return Stance.REFUTES
    return Stance.UNSURE


@dataclass(frozen=True)
class StancePrediction:
    record: BenchmarkRecord
    verdict: Verdict
    stance: Stance
    error: str | None = None

    def __post_init__(self) -> None:
        if self.stance is not map_verdict_to_stance(self.verdict):
            raise ValueError("stance inconsistent with verdict mapping")


_FEVER_LABELS = {"SUPPORTS": Stance.SUPPORTS, "REFUTES": Stance.REFUTES}
_FEVER_DROPPED = {"NOT ENOUGH INFO"}
_AVERITEC_LABELS = {"Supported": Stance.SUPPORTS, "Refuted": Stance.REFUTES}
_AVERITEC_DROPPED = {"Not Enough Evidence", "Conflicting Evidence/Cherrypicking"}


def _sample(records: list[BenchmarkRecord], n: int, seed: int) -> list[BenchmarkRecord]:
    if n == 0:
        return []
    if n > len(records):
        raise ValueError(f"asked for {n} records but only {len(records)} usable ones exist")
    return random.Random(seed).sample(records, n)


def _rows(path: str | Path) -> list[tuple[int, Any]]:
    """Rows of a dataset file with 1-based line/record numbers.

    FEVER ships line-delimited JSON; AVeriTeC ships a JSON array. Both are
    accepted; for array files the "line" is the record ordinal.
    """
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        try:
            parsed = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON array: {exc.msg}", line=exc.lineno) from exc
        return [(i, row) for i, row in enumerate(parsed, start=1)]
    rows: list[tuple[int, Any]] = []
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append((i, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=i) from exc
    return rows


def _load(
    path: str | Path,
    n: int,
    seed: int,
    *,
    dataset: Dataset,
    labels: dict[str, Stance],
    dropped: set[str],
) -> list[BenchmarkRecord]:
    usable: list[BenchmarkRecord] = []
    for line, row in _rows(path):
        if not isinstance(row, dict):
            raise ParseError("record is not an object", line=line)
        claim = row.get("claim")
        label = row.get("label")
        if not isinstance(claim, str) or not claim.strip():
            raise ParseError("missing claim text", line=line)
        if not isinstance(label, str):
            raise ParseError("missing label", line=line)
        if label in dropped:
            continue
        if label not in labels:
            raise ParseError(f"unknown label {label!r}", line=line)
        usable.append(
            BenchmarkRecord(dataset=dataset, claim_text=claim.strip(), gold_stance=labels[label])
        )
    return _sample(usable, n, seed)


def load_fever(path: str | Path, n: int, seed: int) -> list[BenchmarkRecord]:
    """Seeded sample of n FEVER records; NOT ENOUGH INFO is dropped."""
    return _load(
        path, n, seed, dataset=Dataset.FEVER, labels=_FEVER_LABELS, dropped=_FEVER_DROPPED
    )


def load_averitec(path: str | Path, n: int, seed: int) -> list[BenchmarkRecord]:
    """Seeded sample of n AVeriTeC records; the two unresolvable labels are dropped."""
    return _load(
        path, n, seed, dataset=Dataset.AVERITEC, labels=_AVERITEC_LABELS, dropped=_AVERITEC_DROPPED
    )


# --- metrics -------------------------------------------------------------


@dataclass(frozen=True)
class ClassMetrics:
    precision: float | None
    recall: float | None
    f1: float | None
    support: int  # gold occurrences of the class in the slice


@dataclass(frozen=True)
class SliceMetrics:
    support: int
    unsure_predictions: int
    accuracy: float | None
    per_class: dict[Stance, ClassMetrics]


@dataclass(frozen=True)
class MetricsTable:
    slices: dict[str, dict[str, SliceMetrics]]  # slice -> {"all" | "wo_unsure"}
    predictions: tuple[StancePrediction, ...] = field(default_factory=tuple)

    def to_json(self) -> dict[str, Any]:
        def class_json(m: ClassMetrics) -> dict[str, Any]:
            return {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
            }

        return {
            "slices": {
                name: {
                    variant: {
                        "support": m.support,
                        "unsure_predictions": m.unsure_predictions,
                        "accuracy": m.accuracy,
                        "classes": {s.value: class_json(cm) for s, cm in m.per_class.items()},
                    }
                    for variant, m in variants.items()
                }
                for name, variants in self.slices.items()
            },
            "predictions": [
                {
                    "dataset": p.record.dataset.value,
                    "claim": p.record.claim_text,
                    "gold": p.record.gold_stance.value,
                    "verdict": p.verdict.value,
                    "stance": p.stance.value,
                    "error": p.error,
                }
                for p in self.predictions
            ],
        }


def compute_slice_metrics(pairs: Sequence[tuple[Stance, Stance]]) -> SliceMetrics:
    """Metrics over (gold, predicted) pairs. Empty slices yield None metrics."""
    support = len(pairs)
    unsure = sum(1 for _, pred in pairs if pred is Stance.UNSURE)
    accuracy = (
        sum(1 for gold, pred in pairs if gold is pred) / support if support else None
    )
    per_class: dict[Stance, ClassMetrics] = {}
    for cls in (Stance.SUPPORTS, Stance.REFUTES):
        tp = sum(1 for gold, pred in pairs if pred is cls and gold is cls)
        fp = sum(1 for gold, pred in pairs if pred is cls and gold is not cls)
        fn = sum(1 for gold, pred in pairs if gold is cls and pred is not cls)
        precision = tp / (tp + fp) if (tp + fp) else None
        recall = tp / (tp + fn) if (tp + fn) else None
        if precision is not None and recall is not None and (precision + recall) > 0:
            f1 = 2 * precision * recall / (precision + recall)
        elif precision is not None and recall is not None:
            f1 = 0.0
        else:
            f1 = None
        per_class[cls] = ClassMetrics(precision=precision, recall=recall, f1=f1, support=tp + fn)
    return SliceMetrics(
        support=support, unsure_predictions=unsure, accuracy=accuracy, per_class=per_class
    )


def _table_for(predictions: Sequence[StancePrediction]) -> dict[str, dict[str, SliceMetrics]]:
    def slice_pair(preds: Sequence[StancePrediction]) -> dict[str, SliceMetrics]:
        pairs = [(p.record.gold_stance, p.stance) for p in preds]
        kept = [(g, s) for g, s in pairs if s is not Stance.UNSURE]
        return {"all": compute_slice_metrics(pairs), "wo_unsure": compute_slice_metrics(kept)}

    slices = {"ALL": slice_pair(predictions)}
    for dataset in Dataset:
        subset = [p for p in predictions if p.record.dataset is dataset]
        if subset:
            slices[dataset.value] = slice_pair(subset)
    return slices


def evaluate(
    records: Sequence[BenchmarkRecord],
    assessor: Callable[[Claim], ClaimAssessment],
    *,
    workers: int = EVALUATION_WORKERS,
) -> MetricsTable:
    """Run the assessor over every record and compute the metrics table.

    Assessor failures are recorded per record and counted as Unsure; a
    failing record never aborts the run.
    """
    if not records:
        raise ValueError("records must be non-empty")

    def run_one(indexed: tuple[int, BenchmarkRecord]) -> StancePrediction:
        index, record = indexed
        claim = Claim(claim_id=index, text=record.claim_text)
        try:
            assessment = assessor(claim)
            verdict = assessment.verdict
            error = None
        except Exception as exc:
            verdict = Verdict.UNSURE
            error = f"{type(exc).__name__}: {exc}"
        return StancePrediction(
            record=record, verdict=verdict, stance=map_verdict_to_stance(verdict), error=error
        )

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        predictions = tuple(pool.map(run_one, enumerate(records, start=1)))

    return MetricsTable(slices=_table_for(predictions), predictions=predictions)


def _fmt(value: float | None) -> str:
    return "—" if value is None else f"{value:.3f}"


def render_table(table: MetricsTable) -> str:
    """Aligned plain-text table: slices x metrics, with and without Unsure."""
    rows: list[tuple[str, str, str, str]] = [("slice", "metric", "all", "w/o Unsure")]
    for name, variants in table.slices.items():
        all_m, wo_m = variants["all"], variants["wo_unsure"]
        rows.append((name, "support", str(all_m.support), str(wo_m.support)))
        rows.append((name, "unsure predictions", str(all_m.unsure_predictions), "0"))
        rows.append((name, "accuracy", _fmt(all_m.accuracy), _fmt(wo_m.accuracy)))
        for cls in (Stance.SUPPORTS, Stance.REFUTES):
            a, w = all_m.per_class[cls], wo_m.per_class[cls]
            label = cls.value.capitalize()
            rows.append((name, f"precision ({label})", _fmt(a.precision), _fmt(w.precision)))
            rows.append((name, f"recall ({label})", _fmt(a.recall), _fmt(w.recall)))
            rows.append((name, f"F1 ({label})", _fmt(a.f1), _fmt(w.f1)))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("-" * (sum(widths) + 6))
    return "\n".join(lines)


QUESTIONS_PROMPT = """\
Rewrite the claim below as 1 to {max_questions} precise questions suitable for
fact-checking. A compound claim becomes one question per checkable part. Every
question must end with a question mark.

Claim: {claim}

Reply with ONLY a JSON object: {{"questions": ["<question>?"]}}
"""


def questions_for_claim(
    claim: Claim,
    client: llm.ModelClient,
    model_config: llm.ModelConfig | None = None,
    *,
    max_questions: int = 3,
) -> list[VerifiableQuestion]:
    """Turn one bare claim into verifiable questions (benchmark front door)."""
    model_config = model_config or llm.factual_config()

    def validate(parsed: Any) -> list[VerifiableQuestion]:
        if not isinstance(parsed, dict):
            raise SchemaViolation("must be a JSON object", path="$")
        raw = parsed.get("questions")
        if not isinstance(raw, list) or not raw or len(raw) > max_questions:
            raise SchemaViolation(
                f"questions must be an array of 1..{max_questions}", path="questions"
            )
        questions = []
        for i, text in enumerate(raw):
            if not isinstance(text, str) or not text.strip().endswith("?"):
                raise SchemaViolation("question must end with '?'", path=f"questions[{i}]")
            questions.append(
                VerifiableQuestion(
                    question_id=claim.claim_id * 100 + i + 1,
                    claim_id=claim.claim_id,
                    text=text.strip(),
                )
            )
        return questions

    prompt = QUESTIONS_PROMPT.format(claim=claim.text, max_questions=max_questions)
    schema = llm.DocumentSchema(name="claim_questions", validate=validate)
    return llm.complete_structured(client, prompt, schema, model_config, max_attempts=3)


def pipeline_assessor(
    client: llm.ModelClient,
    retrievers: Sequence[Retriever],
    *,
    k: int = 3,
    model_config: llm.ModelConfig | None = None,
    cache: ResponseCache | None = None,
) -> Callable[[Claim], ClaimAssessment]:
    """The full retrieval+verdict pipeline as an assessor handle."""

    def assess(claim: Claim) -> ClaimAssessment:
        questions = questions_for_claim(claim, client, model_config)
        bundles = [
            gather_evidence(question, retrievers, k, cache=cache) for question in questions
        ]
        return assess_claim(claim, questions, bundles, client, model_config)

    return assess
