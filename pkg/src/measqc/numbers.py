"""Numeral normalization: digits, separators, scientific notation, number words."""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation

from .errors import NumberError

_UNITS_WORDS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11,
    "twelve": 12, "thirteen": 13, "fourteen": 14, "fifteen": 15,
    "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
}
_TENS_WORDS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}
NUMBER_WORDS = frozenset(_UNITS_WORDS) | frozenset(_TENS_WORDS) | {"hundred"}

_SUPERSCRIPTS = str.maketrans("⁰¹²³⁴⁵⁶⁷⁸⁹⁻⁺", "0123456789-+")

# 1,234 / 1,234.5 / 1234 / 12.5 / .5 / 1.2e3, optionally signed
_PLAIN_NUMBER = re.compile(
    r"""^[-+−]?
        (?:(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|\.\d+)
        (?:[eE][-+]?\d+)?$""",
    re.VERBOSE,
)
# mantissa × 10 ^ exponent, with ×/x/·/* as the multiplication sign; the
# exponent needs an explicit marker (caret, ** or superscripts) so that
# "1.2×103" stays unreadable rather than silently ambiguous
_POW10 = re.compile(
    r"""^(?P<mantissa>[-+−]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?)
        \s*[×x·*]\s*10
        (?:\s*(?:\^|\*\*)\s*(?P<exponent>[-+−]?\d+)
          |(?P<sup>[⁰¹²³⁴⁵⁶⁷⁸⁹⁻⁺]+))$""",
    re.VERBOSE,
)


def _words_to_int(words: list[str]) -> int:
    total = 0
    current = 0
    expect_units_only = False
    for i, w in enumerate(words):
        if w == "and":
            if not expect_units_only or i == len(words) - 1:
                raise NumberError(f"misplaced 'and' in {' '.join(words)!r}")
            continue
        if w == "hundred":
            if current == 0 or current > 9 or expect_units_only:
                raise NumberError(f"misplaced 'hundred' in {' '.join(words)!r}")
            total += current * 100
            current = 0
            expect_units_only = True
        elif w in _TENS_WORDS:
            if current != 0:
                raise NumberError(f"misplaced tens word in {' '.join(words)!r}")
            current = _TENS_WORDS[w]
        elif w in _UNITS_WORDS:
            value = _UNITS_WORDS[w]
            if current != 0 and (current % 10 != 0 or value > 9):
                raise NumberError(f"misplaced units word in {' '.join(words)!r}")
            current += value
        else:
            raise NumberError(f"unknown number word {w!r}")
    return total + current


def normalize_number(token: str) -> Decimal:
    """Read a numeral candidate as an exact Decimal.

    Accepts decimals, thousands separators, scientific notation (both
    ``1.2e3`` and ``1.2×10^3`` incl. superscript exponents), signed values,
    and spelled-out cardinals up to the hundreds. Raises NumberError on
    anything else.
    """
    raw = token.strip().replace("−", "-")
    if not raw:
        raise NumberError("empty numeral")
    m = _POW10.match(raw)
    if m:
        mantissa = Decimal(m.group("mantissa").replace(",", ""))
        exp_raw = m.group("exponent") or m.group("sup").translate(_SUPERSCRIPTS)
        exponent = int(exp_raw.replace("−", "-"))
        return mantissa * (Decimal(10) ** exponent)
    if _PLAIN_NUMBER.match(raw) and any(c.isdigit() for c in raw):
        try:
            return Decimal(raw.replace(",", ""))
        except InvalidOperation:
            raise NumberError(f"unreadable numeral {token!r}")
    words = [w for w in re.split(r"[\s\-]+", raw.lower()) if w]
    if words and all(w in NUMBER_WORDS or w == "and" for w in words):
        return Decimal(_words_to_int(words))
    raise NumberError(f"unreadable numeral {token!r}")
