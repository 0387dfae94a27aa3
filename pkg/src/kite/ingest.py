"""Document ingestion: page extraction, boilerplate cleaning, section-aware chunking.

The pipeline is ``extract_pages -> clean_pages -> chunk_document``. All three
stages are pure functions over immutable inputs, so documents can be processed
in parallel without shared state.
"""

from __future__ import annotations

import json
import math
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from kite.errors import IngestError
from kite.text import collapse_whitespace, split_sentences_with_offsets


class SourceClass(str, Enum):
    OFFICIAL = "official"
    SUPPLEMENTARY = "supplementary"


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    title: str
    source_class: SourceClass
    pages: tuple[str, ...]
    origin_path: str = ""


@dataclass(frozen=True)
class CleanedDocument:
    doc_id: str
    pages: tuple[str, ...]
    removed_patterns: tuple[str, ...]
    title: str = ""
    source_class: SourceClass = SourceClass.OFFICIAL

    def as_raw(self) -> RawDocument:
        return RawDocument(
            doc_id=self.doc_id,
            title=self.title,
            source_class=self.source_class,
            pages=self.pages,
        )


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    source_class: SourceClass
    section_header: str | None
    text: str
    char_len: int
    page_start: int
    page_end: int


@dataclass(frozen=True)
class ChunkingConfig:
    target_chars: int = 500
    overlap_chars: int = 100
    hard_cap_chars: int = 1000

    def __post_init__(self) -> None:
        if not (0 < self.overlap_chars < self.target_chars <= self.hard_cap_chars):
            raise ValueError(
                "require 0 < overlap_chars < target_chars <= hard_cap_chars, got "
                f"{self.overlap_chars}/{self.target_chars}/{self.hard_cap_chars}"
            )


PAGE_BREAK = "\f"
_TEXT_SUFFIXES = {".txt", ".md", ".markdown", ".text"}

PAGE_NUMBER_SENTINEL = "<page-number>"

# Header/footer-zone line that is just an optional label plus page number(s).
_PAGE_NUMBER_RE = re.compile(
    r"^(?:page|p\.?|pg\.?|no\.?|seite)?\s*\d+\s*(?:(?:/|of|\|)\s*\d+)?$", re.IGNORECASE
)

_NUMBERED_HEADER_RE = re.compile(r"^\d+(?:\.\d+)*[.)]?\s+\S")

_SMALL_WORDS = {
    "a", "an", "the", "of", "in", "on", "for", "to", "and", "or",
    "with", "at", "by", "from", "vs", "via",
}

# Glyph runs stripped during cleaning; mathematical symbols stay untouched.
_GLYPH_CHARS = {"•", "‣", "·"}  # bullets, middle dot


def slugify(name: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9_-]+", "-", name).strip("-")
    return slug or "doc"


def extract_pages(
    path: str | Path,
    source_class: SourceClass,
    *,
    doc_id: str | None = None,
) -> RawDocument:
    """Read a source file into per-page texts.

    The reference backend reads plain text / Markdown and treats a form feed
    as a page separator (a file without form feeds is one page). A PDF
    backend is used when pymupdf is installed.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in _TEXT_SUFFIXES or suffix == "":
        try:
            raw = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            raise IngestError(f"cannot read {path}: {exc}", code="io") from exc
        pages = tuple(raw.split(PAGE_BREAK))
    elif suffix == ".pdf":
        pages = _extract_pdf_pages(path)
    else:
        raise IngestError(f"unsupported format: {path.name}", code="format")
    return RawDocument(
        doc_id=doc_id or slugify(path.stem),
        title=path.stem,
        source_class=source_class,
        pages=pages,
        origin_path=str(path),
    )


def _extract_pdf_pages(path: Path) -> tuple[str, ...]:
    try:
        import fitz  # pymupdf, optional backend
    except ImportError as exc:
        raise IngestError(
            "PDF extraction requires the optional pymupdf package", code="format"
        ) from exc
    try:
        with fitz.open(path) as doc:
            return tuple(page.get_text("text") or "" for page in doc)
    except Exception as exc:  # pymupdf raises its own hierarchy
        raise IngestError(f"cannot read {path}: {exc}", code="io") from exc


def _normalize_pattern(line: str) -> str:
    return re.sub(r"\d", "#", line.strip().lower())


def _zone_indices(n_lines: int) -> set[int]:
    zone = set(range(min(2, n_lines)))
    zone.update(i for i in (n_lines - 2, n_lines - 1) if i >= 0)
    return zone


def _strip_special_chars(text: str) -> str:
    out = []
    for ch in text:
        if ch in "\n\t":
            out.append(ch)
            continue
        if ch in _GLYPH_CHARS:
            continue
        code = ord(ch)
        if 0x2500 <= code <= 0x25FF:  # box drawing, blocks, geometric shapes
            continue
        if unicodedata.category(ch) in ("Cc", "Cf"):
            continue
        out.append(ch)
    return "".join(out)


def clean_pages(doc: RawDocument) -> CleanedDocument:
    """Strip repeated header/footer lines, page numbers, and glyph noise.

    A normalized line (lowercased, digits masked) counts as boilerplate when
    it occurs in the header/footer zone (first/last two lines) of at least
    half the pages, with a minimum of two pages. Page-number lines in the
    zone are removed regardless of repetition.
    """
    pages_lines = [page.splitlines() for page in doc.pages]
    n_pages = len(pages_lines)

    zone_patterns_per_page: list[set[str]] = []
    for lines in pages_lines:
        zone = _zone_indices(len(lines))
        zone_patterns_per_page.append(
            {_normalize_pattern(lines[i]) for i in zone if lines[i].strip()}
        )
    counts: dict[str, int] = {}
    for patterns in zone_patterns_per_page:
        for pattern in patterns:
            counts[pattern] = counts.get(pattern, 0) + 1
    threshold = max(2, math.ceil(0.5 * n_pages))
    boilerplate = {p for p, c in counts.items() if c >= threshold}

    removed: list[str] = []
    cleaned: list[str] = []
    for lines in pages_lines:
        zone = _zone_indices(len(lines))
        kept: list[str] = []
        for i, line in enumerate(lines):
            stripped = line.strip()
            if i in zone and stripped:
                if _PAGE_NUMBER_RE.match(stripped):
                    if PAGE_NUMBER_SENTINEL not in removed:
                        removed.append(PAGE_NUMBER_SENTINEL)
                    continue
                if _normalize_pattern(line) in boilerplate:
                    if stripped not in removed:
                        removed.append(stripped)
                    continue
            kept.append(line)
        text = _strip_special_chars("\n".join(kept))
        cleaned.append(collapse_whitespace(text))

    return CleanedDocument(
        doc_id=doc.doc_id,
        pages=tuple(cleaned),
        removed_patterns=tuple(removed),
        title=doc.title,
        source_class=doc.source_class,
    )


def is_header_line(line: str) -> bool:
    """Heuristic: short line, no sentence-final punctuation, numbered or title case."""
    s = line.strip()
    if not s or len(s) > 80 or s.endswith((".", "?", "!")):
        return False
    if _NUMBERED_HEADER_RE.match(s):
        return True
    words = re.findall(r"[A-Za-z][A-Za-z'-]*", s)
    if not words:
        return False
    for i, word in enumerate(words):
        if word[0].isupper() or word.isupper():
            continue
        if i > 0 and word.lower() in _SMALL_WORDS:
            continue
        return False
    return True


def _split_long(text: str, first_limit: int, rest_limit: int) -> list[str]:
    """Split an oversized span at the nearest whitespace below the limit."""
    pieces: list[str] = []
    remaining = text.strip()
    limit = first_limit
    while len(remaining) > limit:
        cut = remaining.rfind(" ", 1, limit + 1)
        if cut <= 0:
            cut = limit
        pieces.append(remaining[:cut].strip())
        remaining = remaining[cut:].strip()
        limit = rest_limit
    if remaining:
        pieces.append(remaining)
    return [p for p in pieces if p]


@dataclass
class _ChunkDraft:
    header: str | None
    header_page: int | None
    sentences: list[tuple[str, int]] = field(default_factory=list)

    def text(self) -> str:
        body = " ".join(s for s, _ in self.sentences)
        if self.header is not None:
            return self.header + "\n" + body if body else self.header
        return body

    def pages(self) -> tuple[int, int]:
        nums = [p for _, p in self.sentences]
        if self.header_page is not None:
            nums.append(self.header_page)
        return min(nums), max(nums)

    def is_empty(self) -> bool:
        return self.header is None and not self.sentences


def _overlap_sentences(sentences: list[tuple[str, int]], pair_limit: int) -> list[tuple[str, int]]:
    # Carry the final two sentences; fall back to the final one when the
    # pair is longer than twice the nominal overlap.
    if not sentences:
        return []
    tail = sentences[-2:]
    if len(tail) == 2 and len(tail[0][0]) + 1 + len(tail[1][0]) > pair_limit:
        tail = sentences[-1:]
    return list(tail)


def chunk_document(doc: CleanedDocument, cfg: ChunkingConfig | None = None) -> list[Chunk]:
    """Section-aware chunking with sentence overlap.

    A detected header always starts a new chunk and is retained at the start
    of its text. Within a section, chunks grow sentence by sentence until they
    reach the target size; the next chunk starts with the previous chunk's
    overlap sentences. Overlap never carries across section boundaries or
    hard-split fragments of oversized sentences.
    """
    cfg = cfg or ChunkingConfig()
    pair_limit = 2 * cfg.overlap_chars

    events: list[tuple[str, str, int]] = []  # (kind, text, page_no)
    for page_no, page in enumerate(doc.pages, start=1):
        buffer: list[str] = []

        def flush_buffer() -> None:
            if not buffer:
                return
            body = " ".join(buffer)
            for sentence, _ in split_sentences_with_offsets(body):
                events.append(("sentence", sentence, page_no))
            buffer.clear()

        for line in page.split("\n"):
            if is_header_line(line):
                flush_buffer()
                events.append(("header", line.strip(), page_no))
            elif line.strip():
                buffer.append(line.strip())
        flush_buffer()

    chunks: list[Chunk] = []
    counter = 0

    def emit(draft: _ChunkDraft) -> None:
        nonlocal counter
        if draft.is_empty():
            return
        text = draft.text()
        start, end = draft.pages()
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}:{counter:04d}",
                doc_id=doc.doc_id,
                source_class=doc.source_class,
                section_header=draft.header,
                text=text,
                char_len=len(text),
                page_start=start,
                page_end=end,
            )
        )
        counter += 1

    cur = _ChunkDraft(header=None, header_page=None)
    pending_overlap: list[tuple[str, int]] = []

    def close_current() -> None:
        nonlocal cur, pending_overlap
        if cur.is_empty():
            return
        pending_overlap = _overlap_sentences(cur.sentences, pair_limit)
        emit(cur)
        cur = _ChunkDraft(header=None, header_page=None)

    def start_fresh(sentence: str, page: int) -> None:
        # New within-section chunk seeded with the previous chunk's overlap.
        nonlocal cur
        cur = _ChunkDraft(header=None, header_page=None)
        overlap = list(pending_overlap)
        while overlap:
            total = sum(len(s) + 1 for s, _ in overlap) + len(sentence)
            if total <= cfg.hard_cap_chars:
                break
            overlap.pop(0)  # size bound wins over overlap
        cur.sentences = overlap + [(sentence, page)]

    for kind, payload, page_no in events:
        if kind == "header":
            if not cur.is_empty():
                emit(cur)
            cur = _ChunkDraft(header=payload, header_page=page_no)
            pending_overlap = []
            continue

        sentence = payload
        if len(sentence) > cfg.hard_cap_chars:
            # Oversized sentence: emit whitespace-split fragments as their
            # own chunks; no sentence overlap across fragments.
            if cur.sentences:
                emit(cur)
                cur = _ChunkDraft(header=None, header_page=None)
            header_room = (len(cur.header) + 1) if cur.header is not None else 0
            pieces = _split_long(sentence, cfg.hard_cap_chars - header_room, cfg.hard_cap_chars)
            for piece in pieces:
                cur.sentences = [(piece, page_no)]
                emit(cur)
                cur = _ChunkDraft(header=None, header_page=None)
            pending_overlap = []
            continue

        if cur.is_empty():
            start_fresh(sentence, page_no)
            continue
        current_len = len(cur.text())
        if current_len + 1 + len(sentence) > cfg.hard_cap_chars:
            if cur.sentences:
                close_current()
            else:
                emit(cur)  # header alone; the sentence starts its own chunk
                cur = _ChunkDraft(header=None, header_page=None)
                pending_overlap = []
            start_fresh(sentence, page_no)
        elif cur.sentences and current_len >= cfg.target_chars:
            close_current()
            start_fresh(sentence, page_no)
        else:
            cur.sentences.append((sentence, page_no))

    if not cur.is_empty():
        emit(cur)
    return chunks


CORPUS_FIELDS = (
    "chunk_id",
    "doc_id",
    "source_class",
    "section_header",
    "text",
    "char_len",
    "page_start",
    "page_end",
)


def chunk_to_record(chunk: Chunk) -> dict:
    return {
        "chunk_id": chunk.chunk_id,
        "doc_id": chunk.doc_id,
        "source_class": chunk.source_class.value,
        "section_header": chunk.section_header,
        "text": chunk.text,
        "char_len": chunk.char_len,
        "page_start": chunk.page_start,
        "page_end": chunk.page_end,
    }


def chunk_from_record(record: dict) -> Chunk:
    return Chunk(
        chunk_id=record["chunk_id"],
        doc_id=record["doc_id"],
        source_class=SourceClass(record["source_class"]),
        section_header=record.get("section_header"),
        text=record["text"],
        char_len=record["char_len"],
        page_start=record["page_start"],
        page_end=record["page_end"],
    )


def write_corpus(chunks: list[Chunk], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(json.dumps(chunk_to_record(chunk), ensure_ascii=False) + "\n")


def read_corpus(path: str | Path) -> list[Chunk]:
    path = Path(path)
    if not path.exists():
        raise IngestError(f"corpus file not found: {path}", code="io")
    chunks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                chunks.append(chunk_from_record(json.loads(line)))
    return chunks


def ingest_path(
    path: str | Path,
    source_class: SourceClass,
    cfg: ChunkingConfig | None = None,
    *,
    doc_id: str | None = None,
) -> list[Chunk]:
    """Convenience one-shot: extract, clean, and chunk a single file."""
    raw = extract_pages(path, source_class, doc_id=doc_id)
    return chunk_document(clean_pages(raw), cfg)
