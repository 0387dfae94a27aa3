"""Embedding, flat exact-search vector index, BM25 lexical index, persistence.

The vector index is a dense matrix of unit-norm rows; inner product equals
cosine similarity. Search is exact. Vectors are held as float32 (the on-disk
format) and scored in float64, so a saved-and-reloaded index reproduces
search results bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from kite.errors import IndexingError, LexicalError, ProviderError
from kite.ingest import Chunk, chunk_from_record, chunk_to_record
from kite.text import tokenize

VECTORS_MAGIC = b"KITEVIDX"

DEFAULT_DIM = 3072
DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

_NORM_TOL = 1e-6


def normalize_vector(values, *, chunk_id: str | None = None) -> np.ndarray:
    """Return the L2-normalized float64 copy of ``values``."""
    vec = np.asarray(values, dtype=np.float64).ravel()
    norm = float(np.linalg.norm(vec))
    if not math.isfinite(norm) or norm == 0.0:
        raise ProviderError(
            "degenerate embedding (zero or non-finite norm)",
            code="degenerate_embedding",
            chunk_id=chunk_id,
        )
    return vec / norm


@dataclass
class EmbeddedChunk:
    chunk: Chunk
    vector: np.ndarray  # unit-norm float64


def embed_chunks(chunks: list[Chunk], client, *, expected_dim: int | None = None) -> list[EmbeddedChunk]:
    """Embed chunk texts and L2-normalize every vector."""
    if not chunks:
        return []
    try:
        raw = client.embed([c.text for c in chunks])
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(
            f"embedding client failed: {exc}", chunk_id=chunks[0].chunk_id
        ) from exc
    if len(raw) != len(chunks):
        raise ProviderError(
            f"embedding client returned {len(raw)} vectors for {len(chunks)} chunks",
            chunk_id=chunks[0].chunk_id,
        )
    out = []
    for chunk, values in zip(chunks, raw):
        vec = np.asarray(values, dtype=np.float64).ravel()
        if expected_dim is not None and vec.size != expected_dim:
            raise IndexingError(
                f"embedding dim {vec.size} != configured dim {expected_dim} "
                f"for chunk {chunk.chunk_id}",
                code="dim",
            )
        out.append(EmbeddedChunk(chunk=chunk, vector=normalize_vector(vec, chunk_id=chunk.chunk_id)))
    return out


@dataclass
class VectorIndex:
    vectors: np.ndarray  # (count, dim) float32, unit rows
    ids: list[str]
    dim: int
    _vectors64: np.ndarray | None = field(default=None, repr=False)

    @property
    def count(self) -> int:
        return len(self.ids)

    def rows64(self) -> np.ndarray:
        if self._vectors64 is None:
            self._vectors64 = self.vectors.astype(np.float64)
        return self._vectors64

    def row64(self, position: int) -> np.ndarray:
        return self.rows64()[position]


def build_vector_index(embedded: list[EmbeddedChunk], *, dim: int | None = None) -> VectorIndex:
    if not embedded:
        return VectorIndex(vectors=np.zeros((0, dim or 0), dtype=np.float32), ids=[], dim=dim or 0)
    dims = {e.vector.size for e in embedded}
    if len(dims) != 1:
        raise IndexingError(f"mixed embedding dims: {sorted(dims)}", code="dim")
    actual = dims.pop()
    if dim is not None and actual != dim:
        raise IndexingError(f"embedding dim {actual} != configured dim {dim}", code="dim")
    ids = [e.chunk.chunk_id for e in embedded]
    seen: set[str] = set()
    for cid in ids:
        if cid in seen:
            raise IndexingError(f"duplicate chunk_id: {cid}", code="duplicate")
        seen.add(cid)
    matrix = np.stack([e.vector for e in embedded]).astype(np.float32)
    return VectorIndex(vectors=matrix, ids=ids, dim=actual)


def dense_search(index: VectorIndex, query, k: int) -> list[tuple[str, float]]:
    """Top-k by cosine, descending; ties broken by ascending chunk_id."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0 or index.count == 0:
        return []
    qvec = np.asarray(query, dtype=np.float64).ravel()
    if qvec.size != index.dim:
        raise IndexingError(f"query dim {qvec.size} != index dim {index.dim}", code="dim")
    scores = index.rows64() @ qvec
    order = sorted(range(index.count), key=lambda i: (-scores[i], index.ids[i]))
    return [(index.ids[i], float(scores[i])) for i in order[: min(k, index.count)]]


@dataclass
class LexicalIndex:
    """Okapi BM25 statistics over the tokenized corpus."""

    k1: float = DEFAULT_K1
    b: float = DEFAULT_B
    doc_count: int = 0
    avg_len: float = 0.0
    df: dict[str, int] = field(default_factory=dict)
    tf: dict[str, dict[str, int]] = field(default_factory=dict)
    lengths: dict[str, int] = field(default_factory=dict)


def build_lexical_index(chunks: list[Chunk], *, k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> LexicalIndex:
    lex = LexicalIndex(k1=k1, b=b)
    for chunk in chunks:
        if chunk.chunk_id in lex.tf:
            raise IndexingError(f"duplicate chunk_id: {chunk.chunk_id}", code="duplicate")
        tokens = tokenize(chunk.text)
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        lex.tf[chunk.chunk_id] = counts
        lex.lengths[chunk.chunk_id] = len(tokens)
        for term in counts:
            lex.df[term] = lex.df.get(term, 0) + 1
    lex.doc_count = len(chunks)
    lex.avg_len = (sum(lex.lengths.values()) / lex.doc_count) if lex.doc_count else 0.0
    return lex


def bm25_score(lex: LexicalIndex, query: str, chunk_id: str) -> float:
    """Okapi BM25 with IDF(t) = ln(1 + (N - df + 0.5)/(df + 0.5)).

    Repeated query terms contribute once per occurrence.
    """
    if lex.doc_count == 0:
        raise LexicalError("empty lexical index", code="empty")
    if chunk_id not in lex.tf:
        raise LexicalError(f"unknown chunk_id: {chunk_id}", code="unknown_chunk")
    counts = lex.tf[chunk_id]
    length = lex.lengths[chunk_id]
    if lex.avg_len == 0.0:
        return 0.0
    norm = lex.k1 * (1.0 - lex.b + lex.b * length / lex.avg_len)
    score = 0.0
    for term in tokenize(query):
        tf = counts.get(term, 0)
        if tf == 0:
            continue
        df = lex.df.get(term, 0)
        idf = math.log(1.0 + (lex.doc_count - df + 0.5) / (df + 0.5))
        score += idf * tf * (lex.k1 + 1.0) / (tf + norm)
    return score


@dataclass
class IndexBundle:
    """Everything a query needs: vectors, lexical stats, and chunk payloads."""

    vector_index: VectorIndex
    lexical_index: LexicalIndex
    chunks: dict[str, Chunk]
    meta: dict = field(default_factory=dict)

    def chunk(self, chunk_id: str) -> Chunk:
        return self.chunks[chunk_id]

    @property
    def count(self) -> int:
        return self.vector_index.count

    @property
    def dim(self) -> int:
        return self.vector_index.dim


def corpus_hash(chunks: list[Chunk]) -> str:
    digest = hashlib.sha256()
    for chunk in chunks:
        digest.update(json.dumps(chunk_to_record(chunk), sort_keys=True, ensure_ascii=False).encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def build_index_bundle(
    chunks: list[Chunk],
    embedder,
    *,
    dim: int | None = None,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> IndexBundle:
    embedded = embed_chunks(chunks, embedder, expected_dim=dim)
    vindex = build_vector_index(embedded, dim=dim)
    lex = build_lexical_index(chunks, k1=k1, b=b)
    meta = {
        "dim": vindex.dim,
        "count": vindex.count,
        "k1": k1,
        "b": b,
        "built_at": datetime.now(timezone.utc).isoformat(),
        "corpus_hash": corpus_hash(chunks),
    }
    return IndexBundle(
        vector_index=vindex,
        lexical_index=lex,
        chunks={c.chunk_id: c for c in chunks},
        meta=meta,
    )


def save_index(bundle: IndexBundle, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vindex = bundle.vector_index

    header = VECTORS_MAGIC + struct.pack("<II", vindex.dim, vindex.count)
    with open(out / "vectors.bin", "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(vindex.vectors, dtype="<f4").tobytes())

    with open(out / "ids.jsonl", "w", encoding="utf-8") as fh:
        for cid in vindex.ids:
            fh.write(json.dumps(chunk_to_record(bundle.chunks[cid]), ensure_ascii=False) + "\n")

    lex = bundle.lexical_index
    lex_payload = {
        "k1": lex.k1,
        "b": lex.b,
        "N": lex.doc_count,
        "avg_len": lex.avg_len,
        "df": lex.df,
        "chunks": [
            {"chunk_id": cid, "length": lex.lengths[cid], "tf": lex.tf[cid]}
            for cid in vindex.ids
        ],
    }
    (out / "lexical.json").write_text(json.dumps(lex_payload, ensure_ascii=False), encoding="utf-8")
    (out / "meta.json").write_text(json.dumps(bundle.meta, indent=2), encoding="utf-8")


def load_index(index_dir: str | Path) -> IndexBundle:
    root = Path(index_dir)
    vec_path = root / "vectors.bin"
    if not vec_path.exists():
        raise IndexingError(f"not an index directory: {root}", code="io")

    blob = vec_path.read_bytes()
    if len(blob) < 16 or blob[:8] != VECTORS_MAGIC:
        raise IndexingError(f"bad vectors.bin header in {root}", code="format")
    dim, count = struct.unpack("<II", blob[8:16])
    expected = 16 + 4 * dim * count
    if len(blob) != expected:
        raise IndexingError(
            f"vectors.bin size {len(blob)} != expected {expected}", code="format"
        )
    matrix = np.frombuffer(blob, dtype="<f4", offset=16).reshape(count, dim).copy()

    chunks: dict[str, Chunk] = {}
    ids: list[str] = []
    with open(root / "ids.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            chunk = chunk_from_record(json.loads(line))
            ids.append(chunk.chunk_id)
            chunks[chunk.chunk_id] = chunk
    if len(ids) != count:
        raise IndexingError(f"ids.jsonl has {len(ids)} rows, vectors.bin has {count}", code="format")

    if count:
        norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
        if np.max(np.abs(norms - 1.0)) > _NORM_TOL:
            raise IndexingError("stored vectors are not unit-norm", code="norm")

    lex_payload = json.loads((root / "lexical.json").read_text(encoding="utf-8"))
    lex = LexicalIndex(
        k1=lex_payload["k1"],
        b=lex_payload["b"],
        doc_count=lex_payload["N"],
        avg_len=lex_payload["avg_len"],
        df={t: int(c) for t, c in lex_payload["df"].items()},
        tf={row["chunk_id"]: {t: int(c) for t, c in row["tf"].items()} for row in lex_payload["chunks"]},
        lengths={row["chunk_id"]: int(row["length"]) for row in lex_payload["chunks"]},
    )

    meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))
    vindex = VectorIndex(vectors=matrix, ids=ids, dim=dim)
    return IndexBundle(vector_index=vindex, lexical_index=lex, chunks=chunks, meta=meta)
