"""The six-section quantity reasoning trace: format check and conclusion parsing.

A well-formed generation opens and closes each of the six sections exactly
once, in canonical order, and carries a parseable TSV block inside
CONCLUSION (one predicted quantity per row: surface, optional unit,
optional comma-joined or JSON-list modifiers).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

SECTIONS = (
    "ARABIC-QUANTITY",
    "NUMERIC-QUANTITY",
    "TIME-QUANTITY",
    "CHANGE-QUANTITY",
    "FORMULA-QUANTITY",
    "CONCLUSION",
)
_TAG_RE = re.compile(r"</?(%s)>" % "|".join(SECTIONS))
_CONCLUSION_BODY_RE = re.compile(r"<CONCLUSION>(.*?)</CONCLUSION>", re.DOTALL)

CANONICAL_TAG_SEQUENCE = tuple(
    (name, closing) for name in SECTIONS for closing in (False, True)
)


@dataclass(frozen=True)
class FormatVerdict:
    well_formed: bool
    violations: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        assert self.well_formed == (not self.violations)

    @staticmethod
    def from_violations(violations: list[tuple[str, str]]) -> "FormatVerdict":
        return FormatVerdict(not violations, tuple(violations))


@dataclass(frozen=True)
class ConclusionRow:
    """One predicted quantity from the CONCLUSION block; surface kept verbatim."""

    surface: str
    unit: str | None = None
    modifiers: tuple[str, ...] = ()

    def as_line(self) -> str:
        return "\t".join((self.surface, self.unit or "", ",".join(self.modifiers)))


@dataclass(frozen=True)
class QuantityTrace:
    sections: dict[str, str] = field(default_factory=dict)
    conclusion_rows: tuple[ConclusionRow, ...] = ()
    row_errors: tuple[str, ...] = ()


def _parse_modifiers(raw: str) -> tuple[str, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    if raw.startswith("["):
        try:
            parsed = json.decoder.JSONDecoder().decode(raw)
            if isinstance(parsed, list):
                return tuple(str(m) for m in parsed)
        except ValueError:
            pass
    return tuple(m for m in (part.strip() for part in raw.split(",")) if m)


def parse_conclusion_rows(body: str) -> tuple[list[ConclusionRow], list[str]]:
    """Parse the TSV block: bad rows are collected, good rows still returned."""
    rows: list[ConclusionRow] = []
    errors: list[str] = []
    for line_no, line in enumerate(body.splitlines(), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) > 3:
            errors.append(f"row {line_no}: expected at most 3 columns, got {len(cols)}")
            continue
        surface = cols[0]
        if not surface.strip():
            errors.append(f"row {line_no}: empty surface")
            continue
        unit = cols[1].strip() if len(cols) > 1 and cols[1].strip() else None
        mods = _parse_modifiers(cols[2]) if len(cols) > 2 else ()
        rows.append(ConclusionRow(surface=surface, unit=unit, modifiers=mods))
    return rows, errors


def extract_conclusion_body(generation: str) -> str | None:
    m = _CONCLUSION_BODY_RE.search(generation)
    return m.group(1) if m else None


def scan_tags(generation: str) -> list[tuple[str, bool]]:
    return [
        (m.group(1), m.group(0).startswith("</")) for m in _TAG_RE.finditer(generation)
    ]


def check_quantity_format(generation: str) -> FormatVerdict:
    """Verdict on the six-section schema.

    Well-formed iff the scanned tag sequence equals the canonical
    open/close sequence and the CONCLUSION block parses row by row.
    """
    tags = scan_tags(generation)
    violations: list[tuple[str, str]] = []
    for name in SECTIONS:
        opens = sum(1 for t, closing in tags if t == name and not closing)
        closes = sum(1 for t, closing in tags if t == name and closing)
        if opens == 0 and closes == 0:
            violations.append(("missing-tag", f"missing tag {name}"))
        elif opens > 1 or closes > 1:
            violations.append(("duplicate-tag", f"duplicate tag {name}"))
        elif closes == 0:
            violations.append(("unclosed-tag", f"unclosed tag {name}"))
        elif opens == 0:
            violations.append(("unopened-tag", f"close tag {name} without open"))
    if not violations and tuple(tags) != CANONICAL_TAG_SEQUENCE:
        violations.append(("order-violation", "tags out of canonical order"))
    body = extract_conclusion_body(generation)
    if body is not None:
        _, row_errors = parse_conclusion_rows(body)
        for err in row_errors:
            violations.append(("unparseable-conclusion", f"conclusion {err}"))
    return FormatVerdict.from_violations(violations)


def parse_trace(generation: str) -> tuple[QuantityTrace, FormatVerdict]:
    """Parse whatever is parseable and return it with the format verdict."""
    verdict = check_quantity_format(generation)
    sections: dict[str, str] = {}
    for name in SECTIONS:
        m = re.search(rf"<{name}>(.*?)</{name}>", generation, re.DOTALL)
        if m:
            sections[name] = m.group(1)
    body = extract_conclusion_body(generation)
    rows, errors = parse_conclusion_rows(body) if body is not None else ([], [])
    trace = QuantityTrace(
        sections=sections, conclusion_rows=tuple(rows), row_errors=tuple(errors)
    )
    return trace, verdict


def parse_conclusion(trace: QuantityTrace) -> list[ConclusionRow]:
    """Predicted quantity rows of a parsed trace, in emission order."""
    return list(trace.conclusion_rows)


def render_trace(
    rows: list[ConclusionRow], section_bodies: dict[str, str] | None = None
) -> str:
    """Build a canonical six-section generation around the given conclusion rows."""
    bodies = dict(section_bodies or {})
    parts = []
    for name in SECTIONS:
        if name == "CONCLUSION":
            content = "\n".join(r.as_line() for r in rows)
            content = f"\n{content}\n" if content else "\n"
        else:
            content = bodies.get(name, f"No {name.lower().replace('-', ' ')} found.")
        parts.append(f"<{name}>{content}</{name}>")
    return "\n".join(parts)
