"""Shared text utilities: tokenization, sentence segmentation, whitespace cleanup."""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Suppress sentence splits after these (case-insensitive, matched at word start).
ABBREVIATIONS = ("e.g.", "i.e.", "fig.", "eq.", "cf.", "vs.", "etc.", "al.")

_BOUNDARY_RE = re.compile(r"[.!?]+(?=\s)")


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens; everything else is a separator."""
    return _TOKEN_RE.findall(text.lower())


def _ends_with_abbreviation(prefix: str) -> bool:
    tail = prefix.rstrip().lower()
    for abbr in ABBREVIATIONS:
        if tail.endswith(abbr):
            head = tail[: -len(abbr)]
            if not head or not head[-1].isalpha():
                return True
    return False


def split_sentences_with_offsets(text: str) -> list[tuple[str, int]]:
    """Split on ``.?!`` followed by whitespace and an uppercase/digit start.

    Returns (sentence, start offset) pairs. Abbreviations like "e.g." do not
    end a sentence.
    """
    out: list[tuple[str, int]] = []
    start = 0
    for match in _BOUNDARY_RE.finditer(text):
        end = match.end()
        nxt = end
        while nxt < len(text) and text[nxt].isspace():
            nxt += 1
        if nxt >= len(text):
            break
        if not (text[nxt].isupper() or text[nxt].isdigit()):
            continue
        if _ends_with_abbreviation(text[start:end]):
            continue
        sentence = text[start:end].strip()
        if sentence:
            lead = start + (len(text[start:end]) - len(text[start:end].lstrip()))
            out.append((sentence, lead))
        start = nxt
    rest = text[start:].strip()
    if rest:
        lead = start + (len(text[start:]) - len(text[start:].lstrip()))
        out.append((rest, lead))
    return out


def split_sentences(text: str) -> list[str]:
    return [s for s, _ in split_sentences_with_offsets(text)]


def collapse_whitespace(text: str) -> str:
    """Collapse whitespace runs: any run containing a newline becomes a single
    newline, other runs become a single space."""
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = re.sub(r"\s*\n\s*", "\n", text)
    text = re.sub(r"[^\S\n]+", " ", text)
    return text.strip()
