"""Evaluation dataset rows, metric rows, interaction triples, rubric records."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from kite.errors import EvalError
from kite.tutor import TutorResponse


class Category(str, Enum):
    ALGORITHMIC = "algorithmic"
    PROCEDURAL = "procedural"
    DIRECT_RETRIEVAL = "direct_retrieval"


# Which evaluation track a category belongs to.
METRIC_TRACK_CATEGORIES = {Category.ALGORITHMIC, Category.DIRECT_RETRIEVAL}
SIMULATION_CATEGORIES = {Category.PROCEDURAL}


@dataclass(frozen=True)
class EvalItem:
    item_id: str
    question: str
    reference_answer: str
    category: Category

    def to_record(self) -> dict:
        return {
            "item_id": self.item_id,
            "question": self.question,
            "reference_answer": self.reference_answer,
            "category": self.category.value,
        }

    @classmethod
    def from_record(cls, record: dict) -> "EvalItem":
        return cls(
            item_id=str(record["item_id"]),
            question=record["question"],
            reference_answer=record["reference_answer"],
            category=Category(record["category"]),
        )


def load_eval_items(path: str | Path) -> list[EvalItem]:
    path = Path(path)
    if not path.exists():
        raise EvalError(f"dataset not found: {path}", code="io")
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                items.append(EvalItem.from_record(json.loads(line)))
    return items


def save_eval_items(items: list[EvalItem], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item.to_record(), ensure_ascii=False) + "\n")


METRIC_NAMES = (
    "faithfulness",
    "answer_relevance",
    "context_relevance",
    "answer_similarity",
    "factual_correctness",
    "answer_correctness",
)


@dataclass
class MetricResult:
    item_id: str
    faithfulness: float | None = None
    answer_relevance: float | None = None
    context_relevance: float | None = None
    answer_similarity: float | None = None
    factual_correctness: float | None = None
    answer_correctness: float | None = None
    n_contexts: int = 0

    def value(self, metric: str) -> float | None:
        return getattr(self, metric)

    def to_record(self) -> dict:
        record = {"item_id": self.item_id}
        for name in METRIC_NAMES:
            record[name] = getattr(self, name)
        record["n_contexts"] = self.n_contexts
        return record


@dataclass
class ClaimVerdicts:
    claims: list[str]
    verdicts: list[str]

    def __post_init__(self) -> None:
        if len(self.claims) != len(self.verdicts):
            raise EvalError("claims and verdicts must be parallel", code="shape")


@dataclass
class SimTriple:
    """One two-round interaction: unaided answer, tutor feedback, revision."""

    item_id: str
    round1_answer: str
    feedback: TutorResponse
    feedback_text: str
    round2_answer: str

    def to_record(self) -> dict:
        return {
            "item_id": self.item_id,
            "round1_answer": self.round1_answer,
            "feedback": self.feedback.to_dict(),
            "feedback_text": self.feedback_text,
            "round2_answer": self.round2_answer,
        }


class Transition(str, Enum):
    INCORRECT_TO_CORRECT = "incorrect_to_correct"
    INCORRECT_TO_PARTIAL = "incorrect_to_partial"
    ALREADY_CORRECT = "already_correct"
    PARTIAL_TO_CORRECT = "partial_to_correct"
    PARTIAL_TO_PARTIAL_IMPROVED = "partial_to_partial_improved"
    NA = "na"


IMPROVED_TRANSITIONS = {
    Transition.INCORRECT_TO_CORRECT,
    Transition.INCORRECT_TO_PARTIAL,
    Transition.PARTIAL_TO_CORRECT,
    Transition.PARTIAL_TO_PARTIAL_IMPROVED,
}


class RubricLabel(str, Enum):
    YES = "yes"
    NO = "no"
    NA = "na"


RUBRIC_CRITERIA = (
    "remediation_identifying",
    "remediation_acknowledging",
    "scaffolding",
    "guidance",
    "coherence",
    "tone",
)

RUBRIC_CSV_HEADER = ("item_id", "rater_id") + RUBRIC_CRITERIA + ("transition",)


@dataclass(frozen=True)
class RubricRecord:
    item_id: str
    rater_id: str
    labels: dict  # criterion -> RubricLabel
    transition: Transition


def _parse_label(value: str, *, row: int, column: str) -> RubricLabel:
    try:
        return RubricLabel(value.strip().lower())
    except ValueError:
        raise EvalError(
            f"unknown rubric label {value!r} in row {row}, column {column}", code="label"
        ) from None


def load_rubric_csv(path: str | Path) -> list[RubricRecord]:
    path = Path(path)
    if not path.exists():
        raise EvalError(f"rubric file not found: {path}", code="io")
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RUBRIC_CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise EvalError(f"rubric CSV missing columns: {sorted(missing)}", code="label")
        for row_no, row in enumerate(reader, start=2):
            labels = {
                criterion: _parse_label(row[criterion], row=row_no, column=criterion)
                for criterion in RUBRIC_CRITERIA
            }
            try:
                transition = Transition(row["transition"].strip().lower())
            except ValueError:
                raise EvalError(
                    f"unknown transition label {row['transition']!r} in row {row_no}",
                    code="label",
                ) from None
            records.append(
                RubricRecord(
                    item_id=row["item_id"],
                    rater_id=row["rater_id"],
                    labels=labels,
                    transition=transition,
                )
            )
    return records


def save_rubric_csv(records: list[RubricRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUBRIC_CSV_HEADER)
        for record in records:
            writer.writerow(
                [record.item_id, record.rater_id]
                + [record.labels[c].value for c in RUBRIC_CRITERIA]
                + [record.transition.value]
            )
