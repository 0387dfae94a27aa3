"""End-to-end demo: write a tiny course corpus, build an index, ask questions.

Everything runs offline against the deterministic mock providers.

    python3 scripts/demo_pipeline.py [workdir]
"""

from __future__ import annotations

import sys
from pathlib import Path

from kite.index import build_index_bundle, load_index, save_index
from kite.ingest import ChunkingConfig, SourceClass, chunk_document, clean_pages, extract_pages
from kite.providers import MockEmbedder, MockGenerator, MockReranker
from kite.tutor import Session, TutorEngine

DOCS = {
    "search.txt": (
        "CS Course Notes\n"
        "1. Uninformed Search\n"
        "Breadth first search explores the graph level by level. The frontier lives in a "
        "FIFO queue, so shallow nodes are expanded before deep ones. Depth first search "
        "instead pushes successors onto a stack and dives as deep as it can.\n"
        "1\n"
        "\fCS Course Notes\n"
        "2. Informed Search\n"
        "The A star algorithm orders the frontier by f value, the sum of path cost g and "
        "heuristic estimate h. With an admissible heuristic, A star never overestimates the "
        "remaining cost and returns an optimal path. Ties on f are commonly broken toward "
        "larger g.\n"
        "2\n"
    ),
    "sorting.md": (
        "3. Sorting Methods\n"
        "Merge sort splits the array in half, sorts each half, and merges the sorted runs. "
        "Quick sort partitions around a pivot and recurses into both sides. Heap sort keeps "
        "the minimum element on top of a binary heap.\n"
    ),
}

QUERIES = [
    "What is the f value in A star?",
    "Why does breadth first search find shortest paths?",
    "Trace A star on this graph starting from node S with ties toward larger g",
]


def main() -> None:
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out")
    docs_dir = workdir / "docs"
    docs_dir.mkdir(parents=True, exist_ok=True)
    for name, text in DOCS.items():
        (docs_dir / name).write_text(text, encoding="utf-8")

    chunks = []
    for path in sorted(docs_dir.iterdir()):
        raw = extract_pages(path, SourceClass.OFFICIAL)
        chunks.extend(chunk_document(clean_pages(raw), ChunkingConfig()))
    print(f"chunked {len(DOCS)} documents into {len(chunks)} chunks")

    embedder = MockEmbedder(dim=64, seed=0)
    bundle = build_index_bundle(chunks, embedder, dim=64)
    save_index(bundle, workdir / "indexdir")
    bundle = load_index(workdir / "indexdir")
    print(f"index: {bundle.count} vectors, dim {bundle.dim}")

    engine = TutorEngine(
        bundle, generator=MockGenerator(), embedder=embedder, reranker=MockReranker()
    )
    session = Session(session_id="demo")
    for query in QUERIES:
        outcome = engine.ask(query, session)
        print(f"\nQ: {query}")
        print(f"  intent={outcome.response.intent.value} routing={outcome.routing}")
        print(f"  answer: {outcome.response.answer[:140]}")
        print(f"  citations: {outcome.response.citations}")
        top = outcome.candidates[0]
        print(
            f"  top chunk {top.chunk.chunk_id}: dense={top.dense_score:.3f} "
            f"hybrid={top.hybrid_score:.3f} rerank={top.rerank_score:.3f} "
            f"boosted={top.boosted_score:.3f}"
        )


if __name__ == "__main__":
    main()
