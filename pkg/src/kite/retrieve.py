"""Five-stage retrieval: dense search, hybrid rescoring, MMR, reranking, boosting.

Every candidate keeps its score from each stage so the final ranking is fully
explainable. All stages are deterministic: ties break on ascending chunk_id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from kite.errors import ProviderError
from kite.index import IndexBundle, bm25_score, dense_search, normalize_vector
from kite.ingest import Chunk, SourceClass


@dataclass(frozen=True)
class RetrievalConfig:
    dense_k: int = 50
    dense_weight: float = 0.7
    sparse_weight: float = 0.3
    mmr_lambda: float = 0.7
    mmr_keep: int = 20
    boost_threshold: float = 0.6
    boost_amount: float = 0.3
    final_k: int = 8

    def __post_init__(self) -> None:
        if abs(self.dense_weight + self.sparse_weight - 1.0) > 1e-9:
            raise ValueError("dense_weight + sparse_weight must equal 1")
        if not 0.0 <= self.mmr_lambda <= 1.0:
            raise ValueError("mmr_lambda must lie in [0, 1]")
        if not 0 < self.final_k <= self.mmr_keep <= self.dense_k:
            raise ValueError("require final_k <= mmr_keep <= dense_k, all positive")


@dataclass
class RetrievalCandidate:
    chunk: Chunk
    vector: np.ndarray
    dense_score: float
    bm25_raw: float = 0.0
    bm25_norm: float = 0.0
    hybrid_score: float = 0.0
    mmr_score: float | None = None
    rerank_score: float | None = None
    boosted_score: float | None = None
    final_rank: int | None = None

    def provenance(self) -> dict:
        return {
            "chunk_id": self.chunk.chunk_id,
            "doc_id": self.chunk.doc_id,
            "source_class": self.chunk.source_class.value,
            "section_header": self.chunk.section_header,
            "text": self.chunk.text,
            "dense_score": self.dense_score,
            "bm25_raw": self.bm25_raw,
            "bm25_norm": self.bm25_norm,
            "hybrid_score": self.hybrid_score,
            "mmr_score": self.mmr_score,
            "rerank_score": self.rerank_score,
            "boosted_score": self.boosted_score,
            "final_rank": self.final_rank,
        }


@dataclass
class PipelineTrace:
    dense_ids: list[str] = field(default_factory=list)
    hybrid_ids: list[str] = field(default_factory=list)
    mmr_ids: list[str] = field(default_factory=list)
    rerank_ids: list[str] = field(default_factory=list)
    final_ids: list[str] = field(default_factory=list)


def normalize_bm25(raw_scores: list[float]) -> list[float]:
    """Min-max over the candidate set; a constant set maps to all zeros."""
    if not raw_scores:
        return []
    low, high = min(raw_scores), max(raw_scores)
    if high == low:
        return [0.0 for _ in raw_scores]
    span = high - low
    return [(s - low) / span for s in raw_scores]


def hybrid_rescore(candidates: list[RetrievalCandidate], cfg: RetrievalConfig) -> list[RetrievalCandidate]:
    for cand in candidates:
        cand.hybrid_score = cfg.dense_weight * cand.dense_score + cfg.sparse_weight * cand.bm25_norm
    return sorted(candidates, key=lambda c: (-c.hybrid_score, c.chunk.chunk_id))


def mmr_select(candidates: list[RetrievalCandidate], cfg: RetrievalConfig) -> list[RetrievalCandidate]:
    """Greedy maximal marginal relevance.

    Each step picks argmax of lambda * relevance + (1 - lambda) * diversity,
    with relevance the hybrid score and diversity 1 minus the max cosine to
    the already-selected set (1 when nothing is selected yet).
    """
    lam = cfg.mmr_lambda
    keep = min(cfg.mmr_keep, len(candidates))
    remaining = list(candidates)
    selected: list[RetrievalCandidate] = []
    while len(selected) < keep:
        best: RetrievalCandidate | None = None
        best_value = 0.0
        for cand in remaining:
            if selected:
                diversity = 1.0 - max(float(np.dot(cand.vector, s.vector)) for s in selected)
            else:
                diversity = 1.0
            value = lam * cand.hybrid_score + (1.0 - lam) * diversity
            if (
                best is None
                or value > best_value
                or (value == best_value and cand.chunk.chunk_id < best.chunk.chunk_id)
            ):
                best, best_value = cand, value
        assert best is not None
        best.mmr_score = best_value
        selected.append(best)
        remaining.remove(best)
    return selected


def rerank(query: str, candidates: list[RetrievalCandidate], client) -> list[RetrievalCandidate]:
    """Cross-encoder pass. The client must return one score in [0, 1] per candidate."""
    if not candidates:
        return []
    try:
        scores = client.score(query, [c.chunk.text for c in candidates])
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(f"reranker client failed: {exc}") from exc
    if len(scores) != len(candidates):
        raise ProviderError(
            f"reranker returned {len(scores)} scores for {len(candidates)} candidates"
        )
    for cand, score in zip(candidates, scores):
        score = float(score)
        if not 0.0 <= score <= 1.0:
            raise ProviderError(
                f"reranker score {score} outside [0, 1] for {cand.chunk.chunk_id}",
                code="score_range",
            )
        cand.rerank_score = score
    return sorted(candidates, key=lambda c: (-c.rerank_score, c.chunk.chunk_id))


def apply_source_boost(candidate: RetrievalCandidate, cfg: RetrievalConfig) -> RetrievalCandidate:
    """Official-material chunks scoring strictly above the threshold gain the boost."""
    score = candidate.rerank_score
    if score is None:
        raise ValueError("apply_source_boost requires rerank_score to be set")
    if score > cfg.boost_threshold and candidate.chunk.source_class == SourceClass.OFFICIAL:
        candidate.boosted_score = score + cfg.boost_amount
    else:
        candidate.boosted_score = score
    return candidate


def retrieve_with_trace(
    query: str,
    bundle: IndexBundle,
    embedder,
    reranker,
    cfg: RetrievalConfig | None = None,
) -> tuple[list[RetrievalCandidate], PipelineTrace]:
    cfg = cfg or RetrievalConfig()
    trace = PipelineTrace()
    if bundle.count == 0:
        return [], trace

    try:
        qvec = normalize_vector(embedder.embed([query])[0])
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(f"query embedding failed: {exc}") from exc

    vindex = bundle.vector_index
    positions = {cid: i for i, cid in enumerate(vindex.ids)}
    hits = dense_search(vindex, qvec, cfg.dense_k)
    candidates = [
        RetrievalCandidate(
            chunk=bundle.chunk(cid),
            vector=vindex.row64(positions[cid]),
            dense_score=score,
        )
        for cid, score in hits
    ]
    trace.dense_ids = [c.chunk.chunk_id for c in candidates]

    raws = [bm25_score(bundle.lexical_index, query, c.chunk.chunk_id) for c in candidates]
    norms = normalize_bm25(raws)
    for cand, raw, norm in zip(candidates, raws, norms):
        cand.bm25_raw = raw
        cand.bm25_norm = norm
    candidates = hybrid_rescore(candidates, cfg)
    trace.hybrid_ids = [c.chunk.chunk_id for c in candidates]

    kept = mmr_select(candidates, cfg)
    trace.mmr_ids = [c.chunk.chunk_id for c in kept]

    reranked = rerank(query, kept, reranker)
    trace.rerank_ids = [c.chunk.chunk_id for c in reranked]

    for cand in reranked:
        apply_source_boost(cand, cfg)
    final = sorted(
        reranked,
        key=lambda c: (-c.boosted_score, -c.hybrid_score, c.chunk.chunk_id),
    )[: cfg.final_k]
    for rank, cand in enumerate(final, start=1):
        cand.final_rank = rank
    trace.final_ids = [c.chunk.chunk_id for c in final]
    return final, trace


def retrieve_pipeline(
    query: str,
    bundle: IndexBundle,
    embedder,
    reranker,
    cfg: RetrievalConfig | None = None,
) -> list[RetrievalCandidate]:
    results, _ = retrieve_with_trace(query, bundle, embedder, reranker, cfg)
    return results
