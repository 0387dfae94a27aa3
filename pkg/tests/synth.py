"""Deterministic synthetic course corpus and evaluation fixtures for tests."""

from __future__ import annotations

import random

from kite.index import IndexBundle, build_index_bundle
from kite.ingest import (
    Chunk,
    ChunkingConfig,
    RawDocument,
    SourceClass,
    chunk_document,
    clean_pages,
)
from kite.evalkit.types import Category, EvalItem
from kite.providers import MockEmbedder, MockGenerator, MockReranker
from kite.retrieve import RetrievalConfig
from kite.tutor import TutorEngine

WORDS = [
    "graph", "vertex", "edge", "frontier", "queue", "stack", "heap", "weight",
    "path", "cost", "heuristic", "admissible", "expansion", "traversal",
    "breadth", "depth", "greedy", "dynamic", "memoization", "recursion",
    "invariant", "complexity", "logarithmic", "linear", "quadratic",
    "partition", "pivot", "merge", "sorting", "searching", "distance",
    "spanning", "minimum", "optimal", "relaxation", "priority", "visited",
    "successor", "predecessor", "iteration", "termination", "bound",
    "estimate", "branch", "prune", "goal", "start", "node", "tree", "cycle",
]

HEADER_TOPICS = [
    "Graph Search Fundamentals", "Heuristic Evaluation", "Dynamic Programming",
    "Greedy Strategies", "Sorting Procedures", "Shortest Path Methods",
    "Tree Traversal Patterns", "Complexity Analysis",
]

PLANTED_HEADER = "Algorithms Course Notes"
PLANTED_FOOTER = "(c) University Press"


def _word(i: int) -> str:
    return WORDS[i % len(WORDS)]


def make_sentence(counter: int, length_hint: int) -> str:
    """A sentence around length_hint chars, unique via a digit-free word pair."""
    tag = f"{_word(counter)} {_word(counter // len(WORDS) + 7)}"
    body = f"The {tag} procedure updates the {_word(counter + 3)} structure"
    k = counter
    while len(body) < length_hint - 20:
        body += f" and then relaxes the {_word(k + 11)} {_word(k + 19)} bound"
        k += 5
    return body + " before the next iteration begins."


def make_course_doc(
    doc_index: int,
    *,
    n_pages: int = 4,
    source: SourceClass = SourceClass.OFFICIAL,
    boilerplate: bool = True,
    rng: random.Random | None = None,
) -> RawDocument:
    rng = rng or random.Random(1000 + doc_index)
    pages = []
    counter = doc_index * 1000
    for page_no in range(1, n_pages + 1):
        lines = []
        if boilerplate:
            lines.append(PLANTED_HEADER)
        n_sections = rng.randint(1, 2)
        for s in range(n_sections):
            topic = HEADER_TOPICS[(doc_index + page_no + s) % len(HEADER_TOPICS)]
            lines.append(f"{page_no}.{s + 1} {topic}")
            sentences = []
            for _ in range(rng.randint(3, 7)):
                sentences.append(make_sentence(counter, rng.randint(40, 140)))
                counter += 1
            lines.append(" ".join(sentences))
        if boilerplate:
            lines.append(PLANTED_FOOTER)
            lines.append(f"Page {page_no}")
        pages.append("\n".join(lines))
    return RawDocument(
        doc_id=f"doc{doc_index:03d}",
        title=f"Course Notes {doc_index}",
        source_class=source,
        pages=tuple(pages),
    )


def make_corpus_chunks(
    n_docs: int = 8,
    cfg: ChunkingConfig | None = None,
    *,
    supplementary_every: int = 3,
) -> list[Chunk]:
    chunks: list[Chunk] = []
    for i in range(n_docs):
        source = (
            SourceClass.SUPPLEMENTARY
            if supplementary_every and i % supplementary_every == 2
            else SourceClass.OFFICIAL
        )
        raw = make_course_doc(i, source=source)
        chunks.extend(chunk_document(clean_pages(raw), cfg))
    return chunks


def make_engine(
    n_docs: int = 6,
    *,
    dim: int = 48,
    seed: int = 7,
    retrieval: RetrievalConfig | None = None,
) -> TutorEngine:
    chunks = make_corpus_chunks(n_docs)
    embedder = MockEmbedder(dim=dim, seed=seed)
    bundle = build_index_bundle(chunks, embedder, dim=dim)
    return TutorEngine(
        bundle,
        generator=MockGenerator(),
        embedder=embedder,
        reranker=MockReranker(),
        retrieval=retrieval or RetrievalConfig(),
    )


def make_eval_items(n_algorithmic: int, n_procedural: int, n_direct: int) -> list[EvalItem]:
    items = []
    spec = [
        (Category.ALGORITHMIC, n_algorithmic),
        (Category.PROCEDURAL, n_procedural),
        (Category.DIRECT_RETRIEVAL, n_direct),
    ]
    counter = 0
    for category, count in spec:
        for _ in range(count):
            w1, w2, w3 = _word(counter), _word(counter + 13), _word(counter + 29)
            items.append(
                EvalItem(
                    item_id=f"q{counter:03d}",
                    question=f"What role does the {w1} {w2} procedure play?",
                    reference_answer=(
                        f"The {w1} {w2} procedure updates the {w3} structure. "
                        f"It maintains the {w2} bound across iterations."
                    ),
                    category=category,
                )
            )
            counter += 1
    return items
