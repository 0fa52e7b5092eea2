"""Parsing of relation narratives: cue-driven bracketed fields over a document.

A narrative names measurement components in running text, delimiting each
surface with square brackets and announcing its role with a cue phrase
("... with surface form [up to 798 °C], it has unit [°C] ...").
A "surface form" cue opens a new measurement group; unit/modifier/entity/
property/qualifier cues attach to the current group.

Grounding protocol: every narrated surface (except modifiers, which are
vocabulary tokens) must map to a text span of the source document, using
exact substring search after whitespace normalization. Evidence sentences
are the document sentences containing the narrated quantities; a narrative
may also quote sentences explicitly (a "sentence" cue followed by a quoted
string), and those are grounding-checked too. Failures become verdict
violations; groups are still parsed (flag, don't drop).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .annotations import Annotation, Document, MeasurementGroup, Span
from .lexicon import load_narrative_cues
from .sentences import split_sentences
from .textutil import find_normalized, normalize_ws
from .traces import FormatVerdict

_BRACKET_RE = re.compile(r"\[([^\[\]]*)\]")
_QUOTED_RE = re.compile(r"[\"“]([^\"“”]+)[\"”]")

_SPAN_ROLES = ("Quantity", "MeasuredEntity", "MeasuredProperty", "Qualifier")


@dataclass(frozen=True)
class RelationNarrative:
    evidence_sentences: tuple[str, ...]
    statements: tuple[tuple[str, str], ...]
    groups: tuple[MeasurementGroup, ...]


class _GroupDraft:
    def __init__(self, quantity_surface: str):
        self.quantity_surface = quantity_surface
        self.unit: str | None = None
        self.modifiers: list[str] = []
        self.entity: str | None = None
        self.prop: str | None = None
        self.qualifiers: list[str] = []


def cue_pattern(cue: str) -> re.Pattern:
    """Word-boundary, case-insensitive, whitespace-run-tolerant cue regex."""
    return re.compile(
        r"\b" + r"\s+".join(re.escape(w) for w in cue.split()) + r"\b", re.IGNORECASE
    )


def _cue_positions(window: str, cues: dict[str, str]) -> tuple[str, str] | None:
    """Rightmost cue phrase in the window; returns (cue, role) or None."""
    best = None
    best_end = -1
    for cue, role in cues.items():
        for m in cue_pattern(cue).finditer(window):
            if m.end() > best_end:
                best_end = m.end()
                best = (cue, role)
    return best


def _locate(document: Document, surface: str) -> tuple[Span | None, str]:
    """Span of the surface in the document (whitespace-tolerant) and the
    document's own text for it; falls back to the narrated surface."""
    found = find_normalized(document.text, surface)
    if found is None:
        return None, surface
    span = Span(found[0], found[1])
    return span, document.text[span.start : span.end]


def _draft_to_group(
    draft: _GroupDraft,
    annot_set: int,
    document: Document,
    violations: list[tuple[str, str]],
) -> MeasurementGroup:
    def make(annot_class: str, surface: str, suffix: str, attributes=None) -> Annotation:
        span, text = _locate(document, surface)
        if span is None and annot_class in _SPAN_ROLES:
            kind = "quantity" if annot_class == "Quantity" else "component"
            violations.append(
                (f"ungrounded-{kind}", f"{annot_class} {surface!r} not found in document")
            )
        return Annotation(
            doc_id=document.doc_id,
            annot_set=annot_set,
            annot_class=annot_class,
            annot_id=f"P{annot_set}-{suffix}",
            span=span,
            surface=text,
            attributes=attributes or {},
        )

    attributes = {}
    if draft.unit is not None:
        attributes["unit"] = draft.unit
        if normalize_ws(draft.unit) not in normalize_ws(draft.quantity_surface):
            violations.append(
                ("unit-not-in-quantity",
                 f"unit {draft.unit!r} is not part of {draft.quantity_surface!r}")
            )
    if draft.modifiers:
        attributes["mods"] = list(dict.fromkeys(draft.modifiers))

    quantity = make("Quantity", draft.quantity_surface, "Q", attributes)
    entity = make("MeasuredEntity", draft.entity, "E") if draft.entity else None
    prop = make("MeasuredProperty", draft.prop, "P") if draft.prop else None
    qualifiers = tuple(
        make("Qualifier", q, f"X{i}") for i, q in enumerate(draft.qualifiers, start=1)
    )

    relations = []
    anchor = entity or prop
    if anchor is not None:
        relations.append(
            Annotation(
                doc_id=document.doc_id,
                annot_set=annot_set,
                annot_class="HasQuantity",
                annot_id=f"P{annot_set}-RQ",
                source_id=anchor.annot_id,
                target_id=quantity.annot_id,
            )
        )
    if entity is not None and prop is not None:
        relations.append(
            Annotation(
                doc_id=document.doc_id,
                annot_set=annot_set,
                annot_class="HasProperty",
                annot_id=f"P{annot_set}-RP",
                source_id=entity.annot_id,
                target_id=prop.annot_id,
            )
        )
    for i, q in enumerate(qualifiers, start=1):
        relations.append(
            Annotation(
                doc_id=document.doc_id,
                annot_set=annot_set,
                annot_class="Qualifies",
                annot_id=f"P{annot_set}-RX{i}",
                source_id=q.annot_id,
                target_id=quantity.annot_id,
            )
        )
    return MeasurementGroup(
        annot_set=annot_set,
        quantity=quantity,
        measured_entity=entity,
        measured_property=prop,
        qualifiers=qualifiers,
        relations=tuple(relations),
    )


def _explicit_sentences(
    generation: str, violations: list[tuple[str, str]], document: Document
) -> list[str]:
    sentences = []
    for m in _QUOTED_RE.finditer(generation):
        preceding = generation[max(0, m.start() - 60) : m.start()]
        if not re.search(r"\bsentences?\b", preceding, re.IGNORECASE):
            continue
        quoted = m.group(1)
        if find_normalized(document.text, quoted) is None:
            violations.append(
                ("ungrounded-sentence", f"quoted sentence not in document: {quoted[:60]!r}")
            )
        sentences.append(quoted)
    return sentences


def parse_relation_narrative(
    generation: str, document: Document, cues: dict[str, str] | None = None
) -> tuple[RelationNarrative, FormatVerdict]:
    """Parse statements and groups out of a narrative and judge its format."""
    cues = cues or load_narrative_cues()
    violations: list[tuple[str, str]] = []
    statements: list[tuple[str, str]] = []
    drafts: list[_GroupDraft] = []

    if generation.count("[") != generation.count("]"):
        violations.append(("unmatched-bracket", "unbalanced square brackets"))

    cursor = 0
    current: _GroupDraft | None = None
    for m in _BRACKET_RE.finditer(generation):
        window = generation[cursor:m.start()]
        cursor = m.end()
        content = m.group(1)
        cue = _cue_positions(window, cues)
        if cue is None:
            violations.append(
                ("unrecognized-cue", f"no role cue before bracket [{content}]")
            )
            continue
        _, role = cue
        statements.append((role, content))
        if role == "Quantity":
            current = _GroupDraft(content)
            drafts.append(current)
            continue
        if current is None:
            violations.append(
                ("component-before-quantity", f"{role} cue before any quantity")
            )
            continue
        if role == "Unit":
            current.unit = content
        elif role == "Modifier":
            current.modifiers.extend(
                part.strip() for part in content.split(",") if part.strip()
            )
        elif role == "MeasuredEntity":
            current.entity = content
        elif role == "MeasuredProperty":
            current.prop = content
        elif role == "Qualifier":
            current.qualifiers.append(content)

    if not statements:
        violations.append(("no-analysis", "no analysis statements found"))

    groups = tuple(
        _draft_to_group(draft, i, document, violations)
        for i, draft in enumerate(drafts, start=1)
    )

    explicit = _explicit_sentences(generation, violations, document)
    sentence_spans = split_sentences(document.text)
    derived: list[str] = []
    for g in groups:
        if g.quantity.span is None:
            continue
        home = next(
            (s for s in sentence_spans if s.start <= g.quantity.span.start < s.end), None
        )
        if home is None:
            continue
        sentence = document.text[home.start : home.end]
        if explicit and not any(
            normalize_ws(sentence) == normalize_ws(e)
            or normalize_ws(g.quantity.surface) in normalize_ws(e)
            for e in explicit
        ):
            violations.append(
                ("quantity-outside-evidence",
                 f"quantity {g.quantity.surface!r} lies outside the quoted sentences")
            )
        derived.append(sentence)

    evidence: list[str] = []
    for s in explicit + derived:
        if normalize_ws(s) not in {normalize_ws(e) for e in evidence}:
            evidence.append(s)

    narrative = RelationNarrative(
        evidence_sentences=tuple(evidence),
        statements=tuple(statements),
        groups=groups,
    )
    return narrative, FormatVerdict.from_violations(violations)
