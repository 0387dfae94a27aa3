"""Intent-aware tutoring: classification, grounded prompts, structured responses,
and multi-turn session state.

Queries are classified into one of five pedagogical intents by a keyword and
pattern classifier (rarer, more specific intents shadow the generic fallback).
Each intent selects a response strategy; the generator must reply with a JSON
payload that is validated against intent-conditional requirements, with one
repair retry before the turn fails.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from kite.errors import ConfigError, TutorError
from kite.index import IndexBundle, normalize_vector
from kite.retrieve import (
    PipelineTrace,
    RetrievalCandidate,
    RetrievalConfig,
    retrieve_with_trace,
)


class Intent(str, Enum):
    DIRECT_QUESTION = "direct_question"
    CONCEPTUAL_QUESTION = "conceptual_question"
    ALGORITHM_VALIDATION = "algorithm_validation"
    DEBUGGING = "debugging"
    ALGORITHM_TRACING = "algorithm_tracing"


# Evaluation order: the most specific intent wins; DirectQuestion is the fallback.
INTENT_PRIORITY = (
    Intent.ALGORITHM_TRACING,
    Intent.DEBUGGING,
    Intent.ALGORITHM_VALIDATION,
    Intent.CONCEPTUAL_QUESTION,
)

STICKY_INTENTS = {Intent.ALGORITHM_VALIDATION, Intent.DEBUGGING, Intent.ALGORITHM_TRACING}


class IntentRules:
    """Per-intent keyword phrases and regex patterns, loadable from JSON."""

    def __init__(self, rules: dict[str, dict[str, list[str]]]):
        self.raw = rules
        self._matchers: dict[Intent, list[re.Pattern]] = {}
        for intent in Intent:
            spec = rules.get(intent.value, {})
            compiled = [
                re.compile(r"\b" + re.escape(kw) + r"\b", re.IGNORECASE)
                for kw in spec.get("keywords", [])
            ]
            compiled += [re.compile(p, re.IGNORECASE) for p in spec.get("patterns", [])]
            self._matchers[intent] = compiled

    def matches(self, intent: Intent, query: str) -> bool:
        return any(p.search(query) for p in self._matchers[intent])

    @classmethod
    def defaults(cls) -> "IntentRules":
        data = resources.files("kite").joinpath("data/intent_rules.json").read_text("utf-8")
        return cls(json.loads(data))

    @classmethod
    def from_file(cls, path: str | Path) -> "IntentRules":
        return cls(json.loads(Path(path).read_text("utf-8")))


def classify_intent(query: str, rules: IntentRules | None = None) -> Intent:
    if not query or not query.strip():
        raise TutorError("empty query", code="empty_query")
    rules = rules or IntentRules.defaults()
    for intent in INTENT_PRIORITY:
        if rules.matches(intent, query):
            return intent
    return Intent.DIRECT_QUESTION


# ---------------------------------------------------------------------------
# Prompt building

SYSTEM_INSTRUCTIONS = (
    "You are KITE, a tutoring assistant for an algorithms course. Ground every "
    "statement in the material inside the [CONTEXT] block and do not introduce "
    "claims unsupported by that context. Prefer official course material. Write "
    "in an encouraging tutor tone that emphasizes reasoning over answer delivery."
)

STRATEGY_SECTIONS: dict[Intent, str] = {
    Intent.DIRECT_QUESTION: (
        "Give a grounded explanation of the concept using only the retrieved "
        "material, showing the reasoning behind the answer. Cite the chunk ids "
        "you rely on."
    ),
    Intent.CONCEPTUAL_QUESTION: (
        "Explain the underlying reasoning using only the retrieved material, "
        "then end with exactly one reflective follow-up question (field "
        "follow_up_question) that prompts the student to think further."
    ),
    Intent.ALGORITHM_VALIDATION: (
        "Assess the student's submission Socratically: give a brief evaluation, "
        "explicitly acknowledge the components that are correct, and ask guiding "
        "questions targeting the specific issues (field guiding_questions). "
        "Never reveal the full solution."
    ),
    Intent.DEBUGGING: (
        "Guide the student toward the error through self-examination: ask "
        "diagnostic questions arranged as a numbered hint progression at the "
        "stated hint level, and include one learning point (field learning_point) "
        "connecting the bug to the underlying principle. Do not hand over the fix."
    ),
    Intent.ALGORITHM_TRACING: (
        "Apply the procedure from the course material to the student's concrete "
        "problem instance step by step (field trace_steps). Every step must "
        "update the named state variables (for example the OPEN list, CLOSED "
        "set, and current node) and respect the tie-breaking rules stated in "
        "the query. Finish with the final path and cost when applicable (field "
        "final_result)."
    ),
}

EVALUATION_ADDENDUM = (
    "The student's written answer follows the query. Evaluate it briefly, "
    "acknowledge what is correct, and ask guiding questions about the issues. "
    "Do not provide the full solution."
)

RESPONSE_SCHEMA_NOTE = (
    "Reply with a single JSON object with exactly these fields: answer (string), "
    "follow_up_question (string or null), guiding_questions (array of strings or "
    "null), hint_level (integer or null), learning_point (string or null), "
    "trace_steps (array of {step_no, state, action, rationale} or null), "
    "final_result ({path, cost} or null), citations (array of chunk ids taken "
    "from the context block)."
)


@dataclass
class PromptBundle:
    system_instructions: str
    context_entries: list[tuple[str, str]]  # (chunk_id, text) in retrieval order
    strategy_section: str
    student_query: str
    intent: Intent
    session_summary: str | None = None
    student_answer: str | None = None
    evaluation_mode: bool = False
    hint_level: int | None = None

    @property
    def context_ids(self) -> list[str]:
        return [cid for cid, _ in self.context_entries]

    def render(self) -> str:
        lines = [self.system_instructions, "", "[CONTEXT]"]
        for cid, text in self.context_entries:
            lines.append(f"[{cid}] " + text.replace("\n", " "))
        lines.append("[/CONTEXT]")
        lines.append("")
        lines.append(f"Intent: {self.intent.value}")
        if self.evaluation_mode:
            lines.append("Mode: answer_evaluation")
        if self.hint_level is not None:
            lines.append(f"Hint level: {self.hint_level}")
        lines.append("")
        lines.append(f"Strategy: {self.strategy_section}")
        if self.session_summary:
            lines.append("")
            lines.append(f"Session summary: {self.session_summary}")
        lines.append("")
        lines.append(f"Student query: {self.student_query}")
        if self.student_answer is not None:
            lines.append(f"Student answer: {self.student_answer}")
        lines.append("")
        lines.append(RESPONSE_SCHEMA_NOTE)
        return "\n".join(lines)


def build_prompt(
    intent: Intent,
    candidates: list[RetrievalCandidate],
    query: str,
    *,
    session_summary: str | None = None,
    hint_level: int | None = None,
    student_answer: str | None = None,
    evaluation_mode: bool = False,
) -> PromptBundle:
    strategy = STRATEGY_SECTIONS[intent]
    if evaluation_mode:
        strategy = strategy + " " + EVALUATION_ADDENDUM
    return PromptBundle(
        system_instructions=SYSTEM_INSTRUCTIONS,
        context_entries=[(c.chunk.chunk_id, c.chunk.text) for c in candidates],
        strategy_section=strategy,
        student_query=query,
        intent=intent,
        session_summary=session_summary,
        student_answer=student_answer,
        evaluation_mode=evaluation_mode,
        hint_level=hint_level,
    )


# ---------------------------------------------------------------------------
# Structured responses


@dataclass
class TutorResponse:
    intent: Intent
    answer: str
    follow_up_question: str | None = None
    guiding_questions: list[str] | None = None
    hint_level: int | None = None
    learning_point: str | None = None
    trace_steps: list[dict] | None = None
    final_result: dict | None = None
    citations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "intent": self.intent.value,
            "answer": self.answer,
            "follow_up_question": self.follow_up_question,
            "guiding_questions": self.guiding_questions,
            "hint_level": self.hint_level,
            "learning_point": self.learning_point,
            "trace_steps": self.trace_steps,
            "final_result": self.final_result,
            "citations": list(self.citations),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TutorResponse":
        return cls(
            intent=Intent(data["intent"]),
            answer=data["answer"],
            follow_up_question=data.get("follow_up_question"),
            guiding_questions=data.get("guiding_questions"),
            hint_level=data.get("hint_level"),
            learning_point=data.get("learning_point"),
            trace_steps=data.get("trace_steps"),
            final_result=data.get("final_result"),
            citations=list(data.get("citations") or []),
        )


def _is_str_list(value) -> bool:
    return isinstance(value, list) and all(isinstance(v, str) for v in value)


def payload_problems(intent: Intent, payload: dict, allowed_ids: set[str]) -> list[str]:
    """Intent-conditional schema checks; returns human-readable violations."""
    problems: list[str] = []
    answer = payload.get("answer")
    if not isinstance(answer, str) or not answer.strip():
        problems.append("answer must be a non-empty string")

    citations = payload.get("citations")
    if citations is None:
        citations = []
    if not _is_str_list(citations):
        problems.append("citations must be a list of chunk ids")
    else:
        unknown = [c for c in citations if c not in allowed_ids]
        if unknown:
            problems.append(f"citations not in context: {unknown}")

    follow_up = payload.get("follow_up_question")
    if intent is Intent.CONCEPTUAL_QUESTION:
        if not isinstance(follow_up, str) or not follow_up.strip():
            problems.append("conceptual responses require follow_up_question")
    elif follow_up is not None:
        problems.append("follow_up_question is only valid for conceptual questions")

    guiding = payload.get("guiding_questions")
    if intent is Intent.ALGORITHM_VALIDATION:
        if not _is_str_list(guiding):
            problems.append("validation responses require a guiding_questions list")
    elif guiding is not None:
        problems.append("guiding_questions is only valid for validation responses")

    hint_level = payload.get("hint_level")
    learning_point = payload.get("learning_point")
    if intent is Intent.DEBUGGING:
        if not isinstance(hint_level, int) or hint_level < 1:
            problems.append("debugging responses require integer hint_level >= 1")
        if not isinstance(learning_point, str) or not learning_point.strip():
            problems.append("debugging responses require learning_point")
    else:
        if hint_level is not None:
            problems.append("hint_level is only valid for debugging responses")
        if learning_point is not None:
            problems.append("learning_point is only valid for debugging responses")

    steps = payload.get("trace_steps")
    final_result = payload.get("final_result")
    if intent is Intent.ALGORITHM_TRACING:
        if not isinstance(steps, list) or not steps:
            problems.append("tracing responses require non-empty trace_steps")
        else:
            for i, step in enumerate(steps):
                if not isinstance(step, dict):
                    problems.append(f"trace step {i} must be an object")
                    continue
                if not isinstance(step.get("step_no"), int):
                    problems.append(f"trace step {i} needs integer step_no")
                if not isinstance(step.get("state"), dict):
                    problems.append(f"trace step {i} needs a state object")
                if not isinstance(step.get("action"), str):
                    problems.append(f"trace step {i} needs an action string")
                if not isinstance(step.get("rationale"), str):
                    problems.append(f"trace step {i} needs a rationale string")
        if final_result is not None:
            if (
                not isinstance(final_result, dict)
                or not _is_str_list(final_result.get("path"))
                or not isinstance(final_result.get("cost"), (int, float))
            ):
                problems.append("final_result must be {path: [str], cost: number}")
    else:
        if steps is not None:
            problems.append("trace_steps is only valid for tracing responses")
        if final_result is not None:
            problems.append("final_result is only valid for tracing responses")
    return problems


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```\s*$", re.DOTALL)


def _parse_reply(bundle: PromptBundle, reply: str) -> tuple[TutorResponse | None, list[str]]:
    text = reply.strip()
    fence = _FENCE_RE.match(text)
    if fence:
        text = fence.group(1)
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        return None, [f"reply is not valid JSON ({exc.msg})"]
    if not isinstance(payload, dict):
        return None, ["reply must be a JSON object"]
    problems = payload_problems(bundle.intent, payload, set(bundle.context_ids))
    if problems:
        return None, problems
    response = TutorResponse(
        intent=bundle.intent,
        answer=payload["answer"],
        follow_up_question=payload.get("follow_up_question"),
        guiding_questions=payload.get("guiding_questions"),
        hint_level=payload.get("hint_level"),
        learning_point=payload.get("learning_point"),
        trace_steps=payload.get("trace_steps"),
        final_result=payload.get("final_result"),
        citations=list(payload.get("citations") or []),
    )
    return response, []


def generate_response(bundle: PromptBundle, client) -> TutorResponse:
    """Run the generator and validate its payload, with one repair retry."""
    prompt = bundle.render()
    reply = client.complete(prompt)
    response, problems = _parse_reply(bundle, reply)
    if response is not None:
        return response
    repair = (
        prompt
        + "\n\nYour previous reply was rejected: "
        + "; ".join(problems)
        + ". Reply again with one valid JSON object."
    )
    reply = client.complete(repair)
    response, problems = _parse_reply(bundle, reply)
    if response is None:
        raise TutorError(
            "generator output failed validation after retry: " + "; ".join(problems),
            code="malformed_generation",
        )
    return response


def evaluate_answer(
    question: str,
    student_answer: str,
    candidates: list[RetrievalCandidate],
    client,
) -> TutorResponse:
    """Feedback mode: bypasses intent classification, always validation-shaped."""
    if not question or not question.strip():
        raise TutorError("empty question", code="empty_query")
    if not student_answer or not student_answer.strip():
        raise TutorError("empty student answer", code="empty_answer")
    bundle = build_prompt(
        Intent.ALGORITHM_VALIDATION,
        candidates,
        question,
        student_answer=student_answer,
        evaluation_mode=True,
    )
    return generate_response(bundle, client)


# ---------------------------------------------------------------------------
# Sessions


@dataclass
class Turn:
    query: str
    intent: Intent
    response: TutorResponse
    hints_given: int = 0

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "intent": self.intent.value,
            "response": self.response.to_dict(),
            "hints_given": self.hints_given,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Turn":
        return cls(
            query=data["query"],
            intent=Intent(data["intent"]),
            response=TutorResponse.from_dict(data["response"]),
            hints_given=data.get("hints_given", 0),
        )


@dataclass
class Session:
    session_id: str
    turns: list[Turn] = field(default_factory=list)
    summary: str = ""

    def add_turn(self, turn: Turn) -> None:
        self.turns.append(turn)  # append-only by convention

    @property
    def hints_given(self) -> int:
        return self.turns[-1].hints_given if self.turns else 0


ANAPHORIC_CUE_RE = re.compile(r"\b(it|that|this|why)\b|\bwhat about\b", re.IGNORECASE)

FOLLOW_UP = "follow_up"
NEW_TOPIC = "new_topic"


@dataclass(frozen=True)
class RoutingDecision:
    routing: str  # FOLLOW_UP or NEW_TOPIC
    retained_intent: Intent | None = None


def continue_session(
    session: Session,
    new_query: str,
    embedder,
    *,
    similarity_threshold: float = 0.6,
) -> RoutingDecision:
    """Route a new query against the previous turn.

    Follow-up iff the query embedding is close to the previous query's
    (cosine above the threshold) or the query is short with an anaphoric cue.
    Validation, debugging, and tracing follow-ups keep their prior intent.
    """
    if session is None:
        raise TutorError("unknown session", code="unknown_session")
    if not session.turns:
        return RoutingDecision(routing=NEW_TOPIC)
    previous = session.turns[-1]

    follow_up = False
    if len(new_query.split()) <= 6 and ANAPHORIC_CUE_RE.search(new_query):
        follow_up = True
    else:
        vectors = embedder.embed([new_query, previous.query])
        a = normalize_vector(vectors[0])
        b = normalize_vector(vectors[1])
        follow_up = float(np.dot(a, b)) > similarity_threshold

    if not follow_up:
        return RoutingDecision(routing=NEW_TOPIC)
    retained = previous.intent if previous.intent in STICKY_INTENTS else None
    return RoutingDecision(routing=FOLLOW_UP, retained_intent=retained)


def summarize_context(session: Session) -> str:
    """Deterministic rolling summary of the last turn; never exceeds 500 chars."""
    if not session.turns:
        raise TutorError("session has no turns to summarize", code="empty_session")
    last = session.turns[-1]
    return (
        f"Previously asked: {last.query[:100]}"
        f" | Intent: {last.intent.value}"
        f" | Key points: {last.response.answer[:300]}"
        f" | Hints so far: {last.hints_given}"
    )


# ---------------------------------------------------------------------------
# Engine


@dataclass
class AskOutcome:
    response: TutorResponse
    routing: str
    candidates: list[RetrievalCandidate]
    trace: PipelineTrace


class TutorEngine:
    """Wires retrieval, classification, prompting, and generation together."""

    def __init__(
        self,
        bundle: IndexBundle,
        *,
        generator,
        embedder,
        reranker,
        retrieval: RetrievalConfig | None = None,
        rules: IntentRules | None = None,
    ):
        self.bundle = bundle
        self.generator = generator
        self.embedder = embedder
        self.reranker = reranker
        self.retrieval = retrieval or RetrievalConfig()
        self.rules = rules or IntentRules.defaults()
        embed_dim = getattr(embedder, "dim", None)
        if bundle.count and embed_dim is not None and embed_dim != bundle.dim:
            raise ConfigError(
                f"embedder dim {embed_dim} != index dim {bundle.dim}"
            )

    def _retrieve(self, query: str, final_k: int | None) -> tuple[list[RetrievalCandidate], PipelineTrace]:
        cfg = self.retrieval
        if final_k is not None and final_k != cfg.final_k:
            cfg = replace(cfg, final_k=min(final_k, cfg.mmr_keep))
        return retrieve_with_trace(query, self.bundle, self.embedder, self.reranker, cfg)

    def ask(self, query: str, session: Session | None = None, *, final_k: int | None = None) -> AskOutcome:
        if not query or not query.strip():
            raise TutorError("empty query", code="empty_query")

        routing = NEW_TOPIC
        retained: Intent | None = None
        if session is not None and session.turns:
            decision = continue_session(session, query, self.embedder)
            routing = decision.routing
            retained = decision.retained_intent

        intent = retained or classify_intent(query, self.rules)
        follow_up = routing == FOLLOW_UP
        prev_hints = session.hints_given if session is not None else 0
        hint_level = None
        if intent is Intent.DEBUGGING:
            hint_level = prev_hints + 1 if follow_up else 1

        candidates, trace = self._retrieve(query, final_k)
        summary = summarize_context(session) if (follow_up and session and session.turns) else None
        prompt_bundle = build_prompt(
            intent,
            candidates,
            query,
            session_summary=summary,
            hint_level=hint_level,
        )
        response = generate_response(prompt_bundle, self.generator)

        if session is not None:
            hints = hint_level if intent is Intent.DEBUGGING else prev_hints
            session.add_turn(Turn(query=query, intent=intent, response=response, hints_given=hints))
            session.summary = summarize_context(session)
        return AskOutcome(response=response, routing=routing, candidates=candidates, trace=trace)

    def evaluate_answer(
        self, question: str, student_answer: str, *, final_k: int | None = None
    ) -> tuple[TutorResponse, list[RetrievalCandidate]]:
        if not question or not question.strip():
            raise TutorError("empty question", code="empty_query")
        if not student_answer or not student_answer.strip():
            raise TutorError("empty student answer", code="empty_answer")
        candidates, _ = self._retrieve(question, final_k)
        response = evaluate_answer(question, student_answer, candidates, self.generator)
        return response, candidates
