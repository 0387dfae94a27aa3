"""Model-backend clients.

Every role the engine talks to (generator, embedder, reranker, judge,
simulated student) is a small duck-typed interface:

    embedder:  embed(texts) -> list of vectors
    reranker:  score(query, texts) -> list of floats in [0, 1]
    text role: complete(prompt) -> str

Mock implementations are fully deterministic so any pipeline can run and be
tested offline: embeddings are seeded-hash projections of the token multiset,
text replies come from fixture scripts keyed by request digest with a
deterministic synthesized fallback. HTTP implementations speak a minimal JSON
contract and take their API key from an environment variable, never from
config values.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from typing import Sequence

import numpy as np

from kite.errors import ProviderError
from kite.text import split_sentences, tokenize

_STOPWORDS = {
    "the", "a", "an", "is", "are", "was", "were", "of", "to", "and",
    "in", "on", "for", "it", "this", "that", "with", "as", "by", "be",
    "what", "how", "why", "does", "do", "can", "you", "your", "my",
}


def request_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _content_tokens(text: str) -> list[str]:
    return [t for t in tokenize(text) if t not in _STOPWORDS]


# ---------------------------------------------------------------------------
# Embedding


class MockEmbedder:
    """Deterministic embedding: sum of per-token seeded gaussian directions.

    Texts that share vocabulary get correlated vectors, so retrieval over the
    mock behaves plausibly. Uses hashlib (not hash()) so vectors are stable
    across processes.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._token_cache: dict[str, np.ndarray] = {}
        self.calls: list[list[str]] = []

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is None:
            digest = hashlib.blake2b(f"{self.seed}:{token}".encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            cached = rng.standard_normal(self.dim)
            self._token_cache[token] = cached
        return cached

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        self.calls.append(list(texts))
        out = []
        for text in texts:
            tokens = tokenize(text) or ["<empty>"]
            vec = np.zeros(self.dim)
            for token in tokens:
                vec += self._token_vector(token)
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                vec = self._token_vector("<zero>")
                norm = float(np.linalg.norm(vec))
            out.append((vec / norm).tolist())
        return out

    def ping(self) -> bool:
        return True


class ScriptedEmbedder:
    """Maps exact texts to fixed vectors; unknown texts raise."""

    def __init__(self, mapping: dict[str, Sequence[float]], default: Sequence[float] | None = None):
        self.mapping = dict(mapping)
        self.default = default
        self.calls: list[list[str]] = []

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        self.calls.append(list(texts))
        out = []
        for text in texts:
            if text in self.mapping:
                out.append(list(self.mapping[text]))
            elif self.default is not None:
                out.append(list(self.default))
            else:
                raise ProviderError(f"scripted embedder has no vector for: {text!r}")
        return out

    def ping(self) -> bool:
        return True


# ---------------------------------------------------------------------------
# Reranking


class MockReranker:
    """Jaccard overlap between query and chunk tokens; always in [0, 1]."""

    def __init__(self):
        self.calls: list[tuple[str, list[str]]] = []

    def score(self, query: str, texts: Sequence[str]) -> list[float]:
        self.calls.append((query, list(texts)))
        q = set(tokenize(query))
        out = []
        for text in texts:
            t = set(tokenize(text))
            union = q | t
            out.append(len(q & t) / len(union) if union else 0.0)
        return out

    def ping(self) -> bool:
        return True


class ScriptedReranker:
    """Returns preset scores, one list per call."""

    def __init__(self, batches: Sequence[Sequence[float]]):
        self._batches = [list(b) for b in batches]
        self.calls: list[tuple[str, list[str]]] = []

    def score(self, query: str, texts: Sequence[str]) -> list[float]:
        self.calls.append((query, list(texts)))
        if not self._batches:
            raise ProviderError("scripted reranker exhausted")
        return self._batches.pop(0)

    def ping(self) -> bool:
        return True


class HybridEchoReranker:
    """Identity reranker used in tests: echoes a per-text score mapping."""

    def __init__(self, by_text: dict[str, float]):
        self.by_text = dict(by_text)
        self.calls: list[tuple[str, list[str]]] = []

    def score(self, query: str, texts: Sequence[str]) -> list[float]:
        self.calls.append((query, list(texts)))
        return [self.by_text[t] for t in texts]

    def ping(self) -> bool:
        return True


# ---------------------------------------------------------------------------
# Text roles (generator / judge / student)


class ScriptedText:
    """Replies in order from a fixed list; raises when exhausted."""

    def __init__(self, replies: Sequence[str]):
        self._replies = list(replies)
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if not self._replies:
            raise ProviderError("scripted client exhausted")
        return self._replies.pop(0)

    def ping(self) -> bool:
        return True


def _context_entries(prompt: str) -> list[tuple[str, str]]:
    entries = []
    inside = False
    for line in prompt.splitlines():
        if line.strip() == "[CONTEXT]":
            inside = True
            continue
        if line.strip() == "[/CONTEXT]":
            break
        if inside:
            match = re.match(r"^\[([^\]\s]+)\]\s?(.*)$", line)
            if match:
                entries.append((match.group(1), match.group(2)))
    return entries


def _marker(prompt: str, name: str) -> str | None:
    for line in prompt.splitlines():
        if line.startswith(name):
            return line[len(name):].strip()
    return None


class MockGenerator:
    """Deterministic tutoring generator.

    Replies are looked up in the fixture script by request digest first; when
    absent, a valid response payload is synthesized from the prompt structure
    (intent marker, context block, query). Citations always point at context
    chunk ids, so structured-output invariants hold by construction.
    """

    def __init__(self, script: dict[str, str] | None = None):
        self.script = dict(script or {})
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        digest = request_digest(prompt)
        if digest in self.script:
            return self.script[digest]
        return json.dumps(self._synthesize(prompt), ensure_ascii=False)

    def ping(self) -> bool:
        return True

    def _synthesize(self, prompt: str) -> dict:
        intent = _marker(prompt, "Intent: ") or "direct_question"
        evaluation_mode = _marker(prompt, "Mode: ") == "answer_evaluation"
        hint_marker = _marker(prompt, "Hint level: ")
        query = _marker(prompt, "Student query: ") or ""
        entries = _context_entries(prompt)
        citations = [cid for cid, _ in entries[:3]]
        topic = " ".join(_content_tokens(query)[:4]) or "this topic"

        if entries:
            snippet = entries[0][1][:200]
            grounding = f"The course material states: {snippet}"
        else:
            grounding = "No course material matched this question, so only general guidance follows."

        payload: dict = {
            "answer": "",
            "follow_up_question": None,
            "guiding_questions": None,
            "hint_level": None,
            "learning_point": None,
            "trace_steps": None,
            "final_result": None,
            "citations": citations,
        }

        if evaluation_mode or intent == "algorithm_validation":
            payload["answer"] = (
                f"Evaluation: your work on {topic} shows correct components, "
                "including the overall structure of your approach. "
                f"{grounding} Rather than giving the full solution, work through the questions below."
            )
            payload["guiding_questions"] = [
                f"Which step of your approach to {topic} handles the boundary case?",
                "What invariant should hold after each iteration, and does yours preserve it?",
            ]
        elif intent == "debugging":
            level = int(hint_marker) if hint_marker and hint_marker.isdigit() else 1
            payload["answer"] = (
                f"Hint {level}: 1. What value does the key variable hold right before the "
                f"unexpected output for {topic}? 2. Which loop condition could let that happen? "
                f"{grounding}"
            )
            payload["hint_level"] = level
            payload["learning_point"] = (
                f"Connect the bug to the invariant the algorithm maintains over {topic}."
            )
        elif intent == "algorithm_tracing":
            payload["answer"] = (
                f"Step-by-step execution for {topic}, following the procedure in the course material. "
                f"{grounding}"
            )
            payload["trace_steps"] = [
                {
                    "step_no": 1,
                    "state": {"OPEN": ["S"], "CLOSED": [], "current": "S"},
                    "action": "expand the start node S",
                    "rationale": "S is the only frontier node",
                },
                {
                    "step_no": 2,
                    "state": {"OPEN": ["A", "B"], "CLOSED": ["S"], "current": "A"},
                    "action": "select A",
                    "rationale": "A has the lowest cost under the stated tie-breaking rule",
                },
                {
                    "step_no": 3,
                    "state": {"OPEN": ["B"], "CLOSED": ["S", "A"], "current": "G"},
                    "action": "reach the goal G",
                    "rationale": "goal test succeeds",
                },
            ]
            payload["final_result"] = {"path": ["S", "A", "G"], "cost": 4}
        elif intent == "conceptual_question":
            payload["answer"] = (
                f"{grounding} Reasoning it through: the behaviour follows from how {topic} "
                "is defined in the material above."
            )
            payload["follow_up_question"] = (
                f"How would the outcome change if the assumptions behind {topic} no longer held?"
            )
        else:  # direct_question
            payload["answer"] = (
                f"{grounding} In short, this addresses {topic} as covered in the cited material."
            )
        return payload


class MockJudge:
    """Deterministic judge for the evaluation metrics.

    Scripted replies win by digest; otherwise the TASK header in the prompt
    selects a token-overlap heuristic that always produces well-formed JSON.
    """

    def __init__(self, script: dict[str, str] | None = None):
        self.script = dict(script or {})
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        digest = request_digest(prompt)
        if digest in self.script:
            return self.script[digest]
        task = _marker(prompt, "TASK: ") or ""
        handler = {
            "decompose_claims": self._decompose,
            "judge_claims": self._entail,
            "generate_questions": self._questions,
            "classify_claims": self._classify,
            "judge_sentences": self._sentences,
        }.get(task)
        if handler is None:
            raise ProviderError(f"mock judge cannot handle task: {task!r}")
        return json.dumps(handler(prompt), ensure_ascii=False)

    def ping(self) -> bool:
        return True

    @staticmethod
    def _section(prompt: str, name: str) -> str:
        pattern = re.compile(rf"^{name}:\s*$", re.MULTILINE)
        match = pattern.search(prompt)
        if not match:
            return ""
        rest = prompt[match.end():]
        nxt = re.search(r"^[A-Z]+:\s*$", rest, re.MULTILINE)
        return (rest[: nxt.start()] if nxt else rest).strip()

    def _decompose(self, prompt: str) -> dict:
        answer = self._section(prompt, "ANSWER")
        return {"claims": split_sentences(answer)}

    def _entail(self, prompt: str) -> dict:
        context_tokens = set(tokenize(self._section(prompt, "CONTEXT")))
        try:
            claims = json.loads(self._section(prompt, "CLAIMS"))
        except json.JSONDecodeError:
            claims = []
        verdicts = []
        for claim in claims:
            content = _content_tokens(str(claim))
            supported = all(tok in context_tokens for tok in content)
            verdicts.append("supported" if supported else "unsupported")
        return {"verdicts": verdicts}

    def _questions(self, prompt: str) -> dict:
        count_marker = _marker(prompt, "COUNT: ")
        n = int(count_marker) if count_marker and count_marker.isdigit() else 3
        answer = self._section(prompt, "ANSWER")
        sentences = split_sentences(answer)
        if not sentences:
            return {"questions": []}
        questions = []
        for i in range(n):
            tokens = _content_tokens(sentences[i % len(sentences)])[:8]
            focus = " ".join(tokens) or "the material"
            questions.append(f"What does the material explain about {focus}?")
        return {"questions": questions}

    def _classify(self, prompt: str) -> dict:
        answer_claims = split_sentences(self._section(prompt, "ANSWER"))
        reference_claims = split_sentences(self._section(prompt, "REFERENCE"))
        ref_sets = [set(_content_tokens(c)) for c in reference_claims]
        matched_ref: set[int] = set()
        tp = 0
        for claim in answer_claims:
            tokens = set(_content_tokens(claim))
            hit = None
            for j, ref in enumerate(ref_sets):
                union = tokens | ref
                if union and len(tokens & ref) / len(union) >= 0.5:
                    hit = j
                    break
            if hit is not None:
                tp += 1
                matched_ref.add(hit)
        fp = len(answer_claims) - tp
        fn = len(reference_claims) - len(matched_ref)
        return {"tp": tp, "fp": fp, "fn": fn}

    def _sentences(self, prompt: str) -> dict:
        question_tokens = set(_content_tokens(self._section(prompt, "QUESTION")))
        sentences = split_sentences(self._section(prompt, "CONTEXT"))
        verdicts = []
        for sentence in sentences:
            tokens = set(_content_tokens(sentence))
            verdicts.append("useful" if tokens & question_tokens else "not_useful")
        return {"verdicts": verdicts}


class MockStudent:
    """Simulated learner: a plain first attempt, then a feedback-aware revision."""

    def __init__(self, script: dict[str, str] | None = None):
        self.script = dict(script or {})
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        digest = request_digest(prompt)
        if digest in self.script:
            return self.script[digest]
        question = _marker(prompt, "Question: ") or ""
        topic = " ".join(_content_tokens(question)[:6]) or "the problem"
        if "Tutor feedback:" in prompt:
            return (
                f"Revised answer: reworking {topic} using the tutor feedback, "
                f"I corrected the earlier step and the result now follows. ({digest})"
            )
        return f"First attempt: I believe {topic} works by applying the standard procedure. ({digest})"

    def ping(self) -> bool:
        return True


# ---------------------------------------------------------------------------
# HTTP providers


class _HttpBase:
    def __init__(
        self,
        endpoint: str,
        model: str = "",
        api_key_env: str | None = None,
        timeout: float = 30.0,
        max_retries: int = 2,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_retries = max_retries
        self._client = None

    def _http(self):
        if self._client is None:
            import httpx

            headers = {}
            if self.api_key_env:
                key = os.environ.get(self.api_key_env)
                if not key:
                    raise ProviderError(
                        f"environment variable {self.api_key_env} is not set", code="auth"
                    )
                headers["Authorization"] = f"Bearer {key}"
            self._client = httpx.Client(timeout=self.timeout, headers=headers)
        return self._client

    def _post(self, payload: dict) -> dict:
        last_error: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                response = self._http().post(self.endpoint, json=payload)
                response.raise_for_status()
                return response.json()
            except ProviderError:
                raise
            except Exception as exc:  # httpx errors, JSON decode
                last_error = exc
        raise ProviderError(f"provider request failed: {last_error}", code="http")

    def ping(self) -> bool:
        try:
            import httpx

            response = httpx.get(self.endpoint, timeout=min(self.timeout, 3.0))
            return response.status_code < 500
        except Exception:
            return False


class HttpEmbedder(_HttpBase):
    def __init__(self, *args, dim: int | None = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.dim = dim

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        data = self._post({"role": "embedder", "model": self.model, "input": list(texts)})
        try:
            return [list(map(float, vec)) for vec in data["embeddings"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"bad embedder response: {exc}", code="format") from exc


class HttpTextClient(_HttpBase):
    def __init__(self, role: str, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.role = role

    def complete(self, prompt: str) -> str:
        data = self._post({"role": self.role, "model": self.model, "input": prompt})
        try:
            return str(data["output"])
        except KeyError as exc:
            raise ProviderError("bad text response: missing 'output'", code="format") from exc


class HttpReranker(_HttpBase):
    """Remote cross-encoder. ``logistic=True`` maps raw logits into [0, 1]."""

    def __init__(self, *args, logistic: bool = False, **kwargs):
        super().__init__(*args, **kwargs)
        self.logistic = logistic

    def score(self, query: str, texts: Sequence[str]) -> list[float]:
        data = self._post(
            {"role": "reranker", "model": self.model, "input": {"query": query, "texts": list(texts)}}
        )
        try:
            scores = [float(s) for s in data["scores"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"bad reranker response: {exc}", code="format") from exc
        if self.logistic:
            scores = [1.0 / (1.0 + np.exp(-s)) for s in scores]
        return scores
