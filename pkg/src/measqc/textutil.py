"""Shared text helpers: scoring tokenizer, whitespace normalization, grounding search."""

from __future__ import annotations

import re

# Maximal runs of ASCII letters/digits; every other non-space character is
# its own token, so °, %, µ each count as a token.
_TOKEN_RE = re.compile(r"[A-Za-z0-9]+|[^\sA-Za-z0-9]")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def token_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def find_normalized(haystack: str, needle: str) -> tuple[int, int] | None:
    """Locate ``needle`` in ``haystack``, tolerating differing whitespace runs.

    Exact match is tried first; otherwise any whitespace run in the needle
    matches any whitespace run in the haystack. Returns the span of the
    first occurrence in original offsets, or None.
    """
    pos = haystack.find(needle)
    if pos >= 0:
        return pos, pos + len(needle)
    parts = [re.escape(p) for p in needle.split()]
    if not parts:
        return None
    m = re.search(r"\s+".join(parts), haystack)
    if m:
        return m.span()
    return None
