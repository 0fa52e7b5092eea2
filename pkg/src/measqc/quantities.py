"""Deterministic recognition and validation of quantity expressions.

The parser combines a numeral grammar (digits, scientific notation, number
words), the unit lexicon, and the out-of-scope pattern table. It doubles as
the pseudo-label source for the dataset pipeline and as the validity check
behind the fabrication penalty: a string validates iff it contains at least
one numeral with quantity semantics whose digits are not claimed by an
out-of-scope pattern (figure/table/equation/section citations, bracketed
reference numerals, digit-fused nomenclature).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

from .annotations import Span
from .errors import NumberError, ValidationError
from .lexicon import (
    ScopePattern,
    UnitLexicon,
    load_scope_patterns,
    load_unit_lexicon,
    scope_hits,
)
from .numbers import NUMBER_WORDS, normalize_number

KINDS = ("arabic", "numeric-word", "time", "change", "formula")

_NUMBER_RE = re.compile(
    r"""(?<![\w.,])
        [-+−]?
        (?:(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|\.\d+)
        (?:[eE][-+]?\d+)?""",
    re.VERBOSE,
)
# trailing ×10^k continuation of a mantissa
_POW10_CONT_RE = re.compile(
    r"""\s*[×x·*]\s*10
        (?:\s*(?:\^|\*\*)\s*[-+−]?\d+|[⁰¹²³⁴⁵⁶⁷⁸⁹⁻⁺]+)""",
    re.VERBOSE,
)
_ORDINAL_RE = re.compile(r"(?:st|nd|rd|th)\b")
_NUMBER_WORD_ALT = "|".join(sorted(NUMBER_WORDS, key=len, reverse=True))
_WORD_NUM_RE = re.compile(
    rf"\b(?:{_NUMBER_WORD_ALT})(?:(?:[-\s]|\s+and\s+)+(?:{_NUMBER_WORD_ALT}))*\b",
    re.IGNORECASE,
)
_RANGE_CONNECTOR_RE = re.compile(r"^\s*(?:[-–—~]|to|and)\s*$")
_TOLERANCE_CONNECTOR_RE = re.compile(r"^\s*(?:±|\+/-|\+/−)\s*$")
_UNIT_GAP = " \t   "

# cue regexes anchored at the end of the text preceding a numeral
_PREFIX_CUES: list[tuple[re.Pattern, str, str | None]] = [
    (re.compile(r"(up\s+to)\s*$", re.IGNORECASE), "IsRange", "high"),
    (re.compile(r"(at\s+least|more\s+than|greater\s+than|exceeding|over|above)\s*$", re.IGNORECASE), "IsRange", "low"),
    (re.compile(r"(at\s+most|less\s+than|fewer\s+than|below|under)\s*$", re.IGNORECASE), "IsRange", "high"),
    (re.compile(r"(approximately|approx\.?|about|around|roughly|nearly|almost|circa|ca\.)\s*$", re.IGNORECASE), "IsApproximate", None),
    (re.compile(r"([~≈∼])\s*$"), "IsApproximate", None),
    (re.compile(r"(an\s+average\s+of|a\s+mean\s+of)\s*$", re.IGNORECASE), "IsMean", None),
    (re.compile(r"(a\s+median\s+of)\s*$", re.IGNORECASE), "IsMedian", None),
]
_RANGE_OPENERS = {
    "between": re.compile(r"(between)\s*$", re.IGNORECASE),
    "from": re.compile(r"(from)\s*$", re.IGNORECASE),
}
_CHANGE_CUE_RE = re.compile(
    r"(?:increas\w*|decreas\w*|reduc\w*|ris\w*|rose|fell|fall\w*|dropp?\w*|"
    r"grew|grow\w*|gain\w*|los[st]\w*|declin\w*|improv\w*)\s+(?:by|to|from)?\s*$",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class ParsedQuantity:
    """A validated quantity expression located in its source text.

    ``value`` is the single stated value; two-bound ranges leave it None and
    fill ``low``/``high``. One-bound ranges ("up to X") keep the stated bound
    in both ``value`` and the corresponding bound, with the other absent.
    """

    surface: str
    span: Span
    value: Decimal | None
    low: Decimal | None
    high: Decimal | None
    unit: str | None
    unit_surface: str | None
    modifiers: tuple[str, ...]
    kind: str

    def __post_init__(self):
        for v in (self.value, self.low, self.high):
            if v is not None and not v.is_finite():
                raise ValidationError(f"non-finite quantity value in {self.surface!r}")
        if self.low is not None and self.high is not None and self.low > self.high:
            raise ValidationError(f"inverted range in {self.surface!r}")
        if self.value is None and self.low is None and self.high is None:
            raise ValidationError(f"quantity {self.surface!r} has no value")
        if self.unit_surface and self.unit_surface not in self.surface:
            raise ValidationError(
                f"unit surface {self.unit_surface!r} not inside {self.surface!r}"
            )


@dataclass(frozen=True)
class _Numeral:
    start: int
    end: int
    text: str
    spelled: bool

    def value(self) -> Decimal:
        return normalize_number(self.text)


class QuantityParser:
    def __init__(
        self,
        lexicon: UnitLexicon | None = None,
        patterns: list[ScopePattern] | None = None,
    ):
        self.lexicon = lexicon or load_unit_lexicon()
        self.patterns = patterns if patterns is not None else load_scope_patterns(lexicon=self.lexicon)

    # -- out-of-scope detection -------------------------------------------

    def out_of_scope_hits(self, candidate: str) -> list[tuple[ScopePattern, str]]:
        """Every built-in pattern that fires on the candidate, with the matched substring."""
        return [(p, m.group(0)) for p, m in scope_hits(candidate, self.patterns, self.lexicon)]

    def _blocked_intervals(self, text: str) -> list[tuple[int, int]]:
        return [m.span() for _, m in scope_hits(text, self.patterns, self.lexicon)]

    # -- numeral scanning --------------------------------------------------

    def _digit_numerals(self, text: str, blocked: list[tuple[int, int]]) -> list[_Numeral]:
        found = []
        for m in _NUMBER_RE.finditer(text):
            start, end = m.span()
            cont = _POW10_CONT_RE.match(text, end)
            if cont:
                end = cont.end()
            if any(start >= b0 and end <= b1 for b0, b1 in blocked):
                continue
            if _ORDINAL_RE.match(text, end):
                continue
            if end < len(text) and text[end].isalpha():
                # glued letters must form a unit; anything else is a name,
                # a variable, or nomenclature the scope pass did not claim
                if self.lexicon.match_prefix(text, end) is None:
                    continue
            found.append(_Numeral(start, end, text[start:end], spelled=False))
        return found

    def _word_numerals(self, text: str) -> list[_Numeral]:
        found = []
        for m in _WORD_NUM_RE.finditer(text):
            chunk = m.group(0)
            # trim a trailing dangling "and"
            trimmed = re.sub(r"(?:[-\s]|\s+and)+$", "", chunk, flags=re.IGNORECASE)
            if not trimmed:
                continue
            try:
                normalize_number(trimmed)
            except NumberError:
                continue
            found.append(_Numeral(m.start(), m.start() + len(trimmed), trimmed, spelled=True))
        return found

    # -- assembly ----------------------------------------------------------

    def _attach_unit(self, text: str, pos: int) -> tuple[str | None, str | None, int]:
        """Unit right of ``pos``; returns (canonical, unit surface, new end)."""
        cursor = pos
        while cursor < len(text) and text[cursor] in _UNIT_GAP:
            cursor += 1
        hit = self.lexicon.match_prefix(text, cursor)
        if hit is None:
            return None, None, pos
        entry, end = hit
        return entry.canonical, text[cursor:end], end

    def _leading_cues(self, text: str, start: int) -> tuple[int, list[str], str | None]:
        mods: list[str] = []
        bound: str | None = None
        cursor = start
        progressing = True
        while progressing:
            progressing = False
            for regex, modifier, bound_kind in _PREFIX_CUES:
                m = regex.search(text, 0, cursor)
                if m and m.end(1) <= cursor:
                    cursor = m.start(1)
                    mods.insert(0, modifier)
                    if bound_kind and bound is None:
                        bound = bound_kind
                    progressing = True
                    break
        return cursor, list(dict.fromkeys(mods)), bound

    def _kind(self, text: str, numeral: _Numeral, dimension: str | None, surface_start: int) -> str:
        if numeral.spelled:
            return "numeric-word"
        if _CHANGE_CUE_RE.search(text, 0, surface_start):
            return "change"
        if dimension == "time":
            return "time"
        if re.search(r"[eE][-+]?\d|×|\*\*|\^|[⁰¹²³⁴⁵⁶⁷⁸⁹]", numeral.text):
            return "formula"
        return "arabic"

    def extract(self, text: str) -> list[ParsedQuantity]:
        """All quantity expressions in the text: non-overlapping, sorted by start."""
        blocked = self._blocked_intervals(text)
        numerals = sorted(
            self._digit_numerals(text, blocked) + self._word_numerals(text),
            key=lambda n: n.start,
        )
        results: list[ParsedQuantity] = []
        i = 0
        while i < len(numerals):
            n1 = numerals[i]
            n2 = numerals[i + 1] if i + 1 < len(numerals) else None
            connector = text[n1.end : n2.start] if n2 else ""

            quantity = None
            if n2 and _TOLERANCE_CONNECTOR_RE.match(connector):
                unit, unit_surface, end = self._attach_unit(text, n2.end)
                start, mods, _ = self._leading_cues(text, n1.start)
                mods.append("HasTolerance")
                value = n1.value()
                quantity = self._build(
                    text, start, end if unit else n2.end, value, value, value,
                    unit, unit_surface, mods, n1,
                )
                i += 2
            elif n2 and _RANGE_CONNECTOR_RE.match(connector):
                word = connector.strip().lower()
                opener_pos = None
                valid_range = True
                if word == "and":
                    m = _RANGE_OPENERS["between"].search(text, 0, n1.start)
                    if m:
                        opener_pos = m.start(1)
                    else:
                        valid_range = False
                elif word == "to":
                    m = _RANGE_OPENERS["from"].search(text, 0, n1.start)
                    if m:
                        opener_pos = m.start(1)
                if valid_range:
                    unit, unit_surface, end = self._attach_unit(text, n2.end)
                    anchor = opener_pos if opener_pos is not None else n1.start
                    start, mods, _ = self._leading_cues(text, anchor)
                    mods.append("IsRange")
                    v1, v2 = n1.value(), n2.value()
                    low, high = (v1, v2) if v1 <= v2 else (v2, v1)
                    quantity = self._build(
                        text, start, end if unit else n2.end, None, low, high,
                        unit, unit_surface, mods, n1,
                    )
                    i += 2
                else:
                    quantity = self._single(text, n1)
                    i += 1
            else:
                quantity = self._single(text, n1)
                i += 1

            if results and quantity.span.start < results[-1].span.end:
                continue
            results.append(quantity)
        return results

    def _single(self, text: str, numeral: _Numeral) -> ParsedQuantity:
        unit, unit_surface, end = self._attach_unit(text, numeral.end)
        start, mods, bound = self._leading_cues(text, numeral.start)
        value = numeral.value()
        low = high = None
        if bound == "high":
            high = value
        elif bound == "low":
            low = value
        return self._build(
            text, start, end if unit else numeral.end, value, low, high,
            unit, unit_surface, mods, numeral,
        )

    def _build(
        self, text, start, end, value, low, high, unit, unit_surface, mods, numeral
    ) -> ParsedQuantity:
        dimension = None
        if unit is not None:
            entry = self.lexicon.lookup(unit_surface) if unit_surface else None
            dimension = entry.dimension if entry else None
        surface = text[start:end]
        return ParsedQuantity(
            surface=surface,
            span=Span(start, end),
            value=value,
            low=low,
            high=high,
            unit=unit,
            unit_surface=unit_surface,
            modifiers=tuple(dict.fromkeys(mods)),
            kind=self._kind(text, numeral, dimension, start),
        )

    def validate_span(self, candidate: str) -> ParsedQuantity | None:
        """The parse of a candidate quantity string, or None when it holds no
        numeral with quantity semantics (absence is the fabrication signal)."""
        if not candidate or not candidate.strip():
            return None
        parsed = self.extract(candidate)
        return parsed[0] if parsed else None


_default_parser: QuantityParser | None = None


def default_parser() -> QuantityParser:
    global _default_parser
    if _default_parser is None:
        _default_parser = QuantityParser()
    return _default_parser


def extract_quantities(text: str) -> list[ParsedQuantity]:
    return default_parser().extract(text)


def validate_span(candidate: str) -> ParsedQuantity | None:
    return default_parser().validate_span(candidate)


def out_of_scope_hits(candidate: str) -> list[tuple[ScopePattern, str]]:
    return default_parser().out_of_scope_hits(candidate)
