"""Reference-based response metrics with pluggable judge and embedder clients.

Six metrics: faithfulness, answer relevance, context relevance, answer
similarity, factual correctness, and answer correctness (0.75 * factual
correctness + 0.25 * answer similarity). A metric with an empty denominator
reports None (NA) and is excluded from aggregates.

The judge prompts are fixed template files shipped with the package; they are
part of the external interface, so scripted judges can key replies off them.
"""

from __future__ import annotations

import json
import re
from importlib import resources
from string import Template

import numpy as np

from kite.errors import EvalError, ProviderError
from kite.index import normalize_vector
from kite.evalkit.types import ClaimVerdicts

ANSWER_CORRECTNESS_FACTUAL_WEIGHT = 0.75
ANSWER_CORRECTNESS_SIMILARITY_WEIGHT = 0.25

_TEMPLATE_FILES = {
    "decompose_claims": "claim_decomposition.txt",
    "judge_claims": "claim_entailment.txt",
    "generate_questions": "question_generation.txt",
    "classify_claims": "claim_classification.txt",
    "judge_sentences": "context_usefulness.txt",
}

_template_cache: dict[str, Template] = {}


def judge_template(task: str) -> Template:
    if task not in _template_cache:
        text = (
            resources.files("kite.evalkit")
            .joinpath(f"prompts/{_TEMPLATE_FILES[task]}")
            .read_text("utf-8")
        )
        _template_cache[task] = Template(text)
    return _template_cache[task]


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```\s*$", re.DOTALL)


def _ask_judge(judge, prompt: str, parser):
    """One judge call with a single re-prompt on malformed output."""

    def attempt(p: str):
        reply = judge.complete(p)
        text = reply.strip()
        fence = _FENCE_RE.match(text)
        if fence:
            text = fence.group(1)
        return parser(json.loads(text))

    try:
        return attempt(prompt)
    except ProviderError:
        raise
    except Exception:
        retry = prompt + "\n\nThe previous reply was not valid JSON of the required shape. Reply again."
        try:
            return attempt(retry)
        except ProviderError:
            raise
        except Exception as exc:
            raise EvalError(f"judge output malformed after retry: {exc}", code="judge_format") from exc


def _join_contexts(contexts) -> str:
    return "\n".join(c for c in contexts if c)


def faithfulness(answer: str, contexts, judge) -> float | None:
    """Share of answer claims the retrieved context supports; NA without claims."""
    claims = _ask_judge(
        judge,
        judge_template("decompose_claims").substitute(answer=answer),
        lambda data: [str(c) for c in data["claims"]],
    )
    if not claims:
        return None
    prompt = judge_template("judge_claims").substitute(
        context=_join_contexts(contexts),
        claims=json.dumps(claims, ensure_ascii=False),
    )

    def parse(data) -> list[str]:
        verdicts = [str(v).lower() for v in data["verdicts"]]
        checked = ClaimVerdicts(claims=claims, verdicts=verdicts)
        if any(v not in ("supported", "unsupported") for v in checked.verdicts):
            raise ValueError("verdicts must be supported/unsupported")
        return checked.verdicts

    verdicts = _ask_judge(judge, prompt, parse)
    return sum(v == "supported" for v in verdicts) / len(verdicts)


def answer_relevance(question: str, answer: str, judge, embedder, n_questions: int = 3) -> float | None:
    """Mean cosine between the question and questions generated from the answer."""
    generated = _ask_judge(
        judge,
        judge_template("generate_questions").substitute(n=n_questions, answer=answer),
        lambda data: [str(q) for q in data["questions"]],
    )
    if not generated:
        return None
    vectors = embedder.embed([question] + generated)
    qvec = normalize_vector(vectors[0])
    cosines = [float(np.dot(qvec, normalize_vector(v))) for v in vectors[1:]]
    return min(1.0, max(0.0, sum(cosines) / len(cosines)))


def context_relevance(question: str, contexts, judge) -> float | None:
    """Share of context sentences judged useful for the question; NA without sentences."""
    prompt = judge_template("judge_sentences").substitute(
        question=question, context=_join_contexts(contexts)
    )

    def parse(data) -> list[str]:
        verdicts = [str(v).lower() for v in data["verdicts"]]
        if any(v not in ("useful", "not_useful") for v in verdicts):
            raise ValueError("verdicts must be useful/not_useful")
        return verdicts

    verdicts = _ask_judge(judge, prompt, parse)
    if not verdicts:
        return None
    return sum(v == "useful" for v in verdicts) / len(verdicts)


def answer_similarity(answer: str, reference: str, embedder) -> float:
    """Cosine of the two embeddings, clamped to [0, 1]."""
    vectors = embedder.embed([answer, reference])
    cosine = float(np.dot(normalize_vector(vectors[0]), normalize_vector(vectors[1])))
    return min(1.0, max(0.0, cosine))


def factual_correctness(answer: str, reference: str, judge) -> float | None:
    """Claim-level F1 against the reference; NA when tp = fp = fn = 0."""
    prompt = judge_template("classify_claims").substitute(answer=answer, reference=reference)

    def parse(data) -> tuple[int, int, int]:
        tp, fp, fn = int(data["tp"]), int(data["fp"]), int(data["fn"])
        if min(tp, fp, fn) < 0:
            raise ValueError("counts must be non-negative")
        return tp, fp, fn

    tp, fp, fn = _ask_judge(judge, prompt, parse)
    denominator = 2 * tp + fp + fn
    if denominator == 0:
        return None
    return 2 * tp / denominator


def answer_correctness(fc: float | None, sim: float | None) -> float | None:
    """Weighted blend of factual correctness and answer similarity."""
    if fc is None or sim is None:
        return None
    return ANSWER_CORRECTNESS_FACTUAL_WEIGHT * fc + ANSWER_CORRECTNESS_SIMILARITY_WEIGHT * sim
