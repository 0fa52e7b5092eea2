"""Abbreviation-aware sentence segmentation and quantity-to-sentence grounding."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .annotations import Document, Span

# token preceding a period that does not end a sentence
_ABBREVIATIONS = {
    "fig", "figs", "eq", "eqs", "eqn", "eqns", "tab", "tabs", "sec", "secs",
    "ref", "refs", "no", "nos", "vol", "vols", "al", "e.g", "i.e", "cf",
    "vs", "etc", "ca", "approx", "dr", "prof", "mr", "mrs", "ms", "st",
    "inc", "ltd", "dept", "univ", "resp", "max", "min", "avg", "std",
}
_TERMINAL_RE = re.compile(r"[.!?]+")


def _is_abbreviation(text: str, period_pos: int) -> bool:
    start = period_pos
    while start > 0 and (text[start - 1].isalpha() or text[start - 1] == "."):
        start -= 1
    token = text[start:period_pos].lower().rstrip(".")
    token = token.lstrip(".")
    return token in _ABBREVIATIONS


def split_sentences(text: str) -> list[Span]:
    """Sentence spans found by scanning terminal punctuation.

    Guards: known abbreviations ("Fig.", "et al.", "e.g."), decimal points,
    and terminators followed by a lowercase continuation do not split.
    Spans are trimmed of surrounding whitespace.
    """
    boundaries = []
    for m in _TERMINAL_RE.finditer(text):
        end = m.end()
        if m.group(0) == ".":
            before = text[m.start() - 1] if m.start() > 0 else ""
            after = text[end] if end < len(text) else ""
            if before.isdigit() and after.isdigit():
                continue  # decimal point
            if _is_abbreviation(text, m.start()):
                continue
        nxt = text[end:end + 2].lstrip()
        if nxt and nxt[0].islower():
            continue
        boundaries.append(end)
    if not boundaries or boundaries[-1] < len(text):
        boundaries.append(len(text))
    spans = []
    cursor = 0
    for b in boundaries:
        chunk = text[cursor:b]
        stripped = chunk.strip()
        if stripped:
            start = cursor + (len(chunk) - len(chunk.lstrip()))
            spans.append(Span(start, start + len(stripped)))
        cursor = b
    return spans


@dataclass(frozen=True)
class SentenceGrounding:
    """Quantity surfaces mapped to the sentences containing their first occurrence."""

    entries: tuple[tuple[Span, tuple[str, ...]], ...]
    missing: tuple[str, ...]


def locate_quantity_sentences(document: Document, quantities: list[str]) -> SentenceGrounding:
    """Map each quantity surface to the unique sentence holding its first
    occurrence. Surfaces absent from the document are reported, not fatal."""
    spans = split_sentences(document.text)
    per_sentence: dict[Span, list[str]] = {}
    missing = []
    for q in quantities:
        pos = document.text.find(q)
        if pos < 0:
            missing.append(q)
            continue
        home = next((s for s in spans if s.start <= pos < s.end), None)
        if home is None:
            missing.append(q)
            continue
        per_sentence.setdefault(home, []).append(q)
    entries = tuple(
        (span, tuple(per_sentence[span]))
        for span in sorted(per_sentence, key=lambda s: s.start)
    )
    return SentenceGrounding(entries=entries, missing=tuple(missing))
