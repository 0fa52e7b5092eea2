"""Unit lexicon and out-of-scope pattern tables.

Both tables ship as versioned TSV data files next to this module and can be
overridden with alternative files (CLI flag ``--lexicon``), so novel units
can be added without code changes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import MeasQCError

_WORDLIKE = re.compile(r"^[a-zA-Z]{4,}$")


@dataclass(frozen=True)
class UnitEntry:
    surface: str
    canonical: str
    dimension: str

    @property
    def wordlike(self) -> bool:
        return bool(_WORDLIKE.match(self.surface))


class UnitLexicon:
    """Longest-match unit lookup.

    Symbol surfaces match case-sensitively; purely alphabetic surfaces of
    length >= 4 (spelled-out units) match case-insensitively.
    """

    def __init__(self, entries: list[UnitEntry]):
        self.entries = entries
        self._exact = {e.surface: e for e in entries}
        self._folded = {e.surface.lower(): e for e in entries if e.wordlike}
        self._by_length = sorted({len(e.surface) for e in entries}, reverse=True)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, candidate: str) -> UnitEntry | None:
        """Match the full candidate string against the lexicon."""
        entry = self._exact.get(candidate)
        if entry is not None:
            return entry
        return self._folded.get(candidate.lower())

    def match_prefix(self, text: str, pos: int) -> tuple[UnitEntry, int] | None:
        """Longest lexicon entry starting at ``pos``; returns (entry, end).

        A match ending in an ASCII letter must be followed by a non-letter
        (or end of text) so that e.g. "m" never matches inside "mark".
        """
        for length in self._by_length:
            chunk = text[pos : pos + length]
            if len(chunk) < length:
                continue
            entry = self.lookup(chunk)
            if entry is None:
                continue
            end = pos + length
            if chunk[-1].isalpha() and end < len(text) and text[end].isalpha():
                continue
            return entry, end
        return None


@dataclass(frozen=True)
class ScopePattern:
    """A textual pattern matching numeral-bearing non-quantities."""

    pattern_id: str
    matcher: str
    description: str
    positive_example: str
    negative_example: str

    def compiled(self) -> re.Pattern:
        return re.compile(self.matcher)


def _data_text(name: str) -> str:
    return resources.files("measqc.data").joinpath(name).read_text(encoding="utf-8")


def _read_rows(text: str, n_cols: int, what: str) -> list[list[str]]:
    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != n_cols:
            raise MeasQCError(
                f"{what} line {line_no}: expected {n_cols} tab-separated fields, got {len(cols)}"
            )
        rows.append(cols)
    return rows


def load_unit_lexicon(path: str | Path | None = None) -> UnitLexicon:
    text = Path(path).read_text(encoding="utf-8") if path else _data_text("units.tsv")
    entries = [UnitEntry(*row) for row in _read_rows(text, 3, "unit lexicon")]
    return UnitLexicon(entries)


def load_scope_patterns(
    path: str | Path | None = None, lexicon: UnitLexicon | None = None
) -> list[ScopePattern]:
    """Load the out-of-scope pattern table and run its self-test.

    Every pattern must match its documented positive example and reject its
    documented negative example (for digit-in-nomenclature the unit
    exclusion applies, which is why the lexicon takes part in the test).
    """
    text = Path(path).read_text(encoding="utf-8") if path else _data_text("scope_patterns.tsv")
    patterns = [ScopePattern(*row) for row in _read_rows(text, 5, "scope patterns")]
    lexicon = lexicon or load_unit_lexicon()
    for p in patterns:
        if not _pattern_hits(p, p.positive_example, lexicon):
            raise MeasQCError(
                f"scope pattern {p.pattern_id} fails its positive example {p.positive_example!r}"
            )
        if _pattern_hits(p, p.negative_example, lexicon):
            raise MeasQCError(
                f"scope pattern {p.pattern_id} fires on its negative example {p.negative_example!r}"
            )
    return patterns


def _pattern_hits(
    pattern: ScopePattern, text: str, lexicon: UnitLexicon
) -> list[re.Match]:
    matches = list(pattern.compiled().finditer(text))
    if pattern.pattern_id != "digit-in-nomenclature":
        return matches
    kept = []
    for m in matches:
        letters = m.group(0).lstrip("0123456789")
        if lexicon.lookup(letters) is None:
            kept.append(m)
    return kept


def scope_hits(
    text: str, patterns: list[ScopePattern], lexicon: UnitLexicon
) -> list[tuple[ScopePattern, re.Match]]:
    """Every (pattern, match) pair that fires on the text."""
    hits = []
    for p in patterns:
        for m in _pattern_hits(p, text, lexicon):
            hits.append((p, m))
    return hits


def load_narrative_cues(path: str | Path | None = None) -> dict[str, str]:
    """Cue phrase -> semantic role, for narrative and entropy-trace parsing."""
    text = Path(path).read_text(encoding="utf-8") if path else _data_text("narrative_cues.tsv")
    return {cue: role for cue, role in _read_rows(text, 2, "narrative cues")}
