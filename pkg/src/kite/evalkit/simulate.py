"""Two-round simulated-student protocol.

Per item: (1) the student answers the bare question, (2) the tutor evaluates
that answer and produces feedback, (3) the student revises with the feedback
included verbatim in its prompt. All three artifacts are persisted.
"""

from __future__ import annotations

import json
from pathlib import Path
from string import Template

from kite.errors import KiteError
from kite.evalkit.types import EvalItem, SimTriple, SIMULATION_CATEGORIES
from kite.tutor import TutorEngine, TutorResponse

ROUND1_TEMPLATE = Template(
    "Answer the following course question as well as you can.\n\nQuestion: $question"
)

ROUND2_TEMPLATE = Template(
    "Question: $question\n\n"
    "Your previous answer: $round1\n\n"
    "Tutor feedback: $feedback\n\n"
    "Revise your answer using the feedback."
)


def render_feedback(response: TutorResponse) -> str:
    """Flatten a feedback response into the text shown to the student."""
    parts = [response.answer]
    if response.guiding_questions:
        parts.append("Guiding questions:")
        parts.extend(f"- {q}" for q in response.guiding_questions)
    return "\n".join(parts)


def simulate_student(
    items: list[EvalItem],
    student,
    engine: TutorEngine,
    *,
    top_k: int | None = None,
) -> tuple[list[SimTriple], dict[str, str]]:
    """Run the protocol over the procedural items; per-item errors are recorded
    and the run continues."""
    triples: list[SimTriple] = []
    errors: dict[str, str] = {}
    for item in items:
        if item.category not in SIMULATION_CATEGORIES:
            continue
        try:
            round1 = student.complete(ROUND1_TEMPLATE.substitute(question=item.question))
            feedback, _ = engine.evaluate_answer(item.question, round1, final_k=top_k)
            feedback_text = render_feedback(feedback)
            round2 = student.complete(
                ROUND2_TEMPLATE.substitute(
                    question=item.question, round1=round1, feedback=feedback_text
                )
            )
        except KiteError as exc:
            errors[item.item_id] = f"{exc.code}: {exc}"
            continue
        triples.append(
            SimTriple(
                item_id=item.item_id,
                round1_answer=round1,
                feedback=feedback,
                feedback_text=feedback_text,
                round2_answer=round2,
            )
        )
    return triples, errors


def save_triples(triples: list[SimTriple], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for triple in triples:
            fh.write(json.dumps(triple.to_record(), ensure_ascii=False) + "\n")
