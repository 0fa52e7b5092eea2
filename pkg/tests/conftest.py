from __future__ import annotations

import json

import pytest

from measqc.annotations import Annotation, Corpus, Document, Span, assemble_groups

CASE_TEXT = (
    "Samples were then annealed in air in a pre-heated furnace at temperatures "
    "up to 798 °C for times chosen to ensure complete iron diffusion through the sample."
)
CASE_QUANTITY = "up to 798 °C"
CASE_PROPERTY = "annealed in air in a pre-heated furnace at temperatures"

SFT_NARRATIVE = (
    "We can find the quantity with surface form [up to 798 °C], it has unit [°C]. "
    "The modifier for the quantity are [IsRange]. "
    "This quantity is used to describe the entity [furnace]. "
    "The entity has the following property [temperatures]."
)
GRPO_NARRATIVE = SFT_NARRATIVE.replace("[furnace]", "[Samples]")

# Appendix-style top-5 candidate distributions at the entity position
TOP5_BEFORE = (0.547, 0.376, 0.051, 0.015, 0.011)
TOP5_AFTER = (0.847, 0.115, 0.037, 0.0013, 0.0001)


def span_of(text: str, needle: str) -> Span:
    pos = text.find(needle)
    assert pos >= 0, f"{needle!r} not in text"
    return Span(pos, pos + len(needle))


@pytest.fixture
def case_document() -> Document:
    return Document("anneal-798", CASE_TEXT)


@pytest.fixture
def case_gold_annotations(case_document) -> list[Annotation]:
    text = case_document.text
    q = span_of(text, CASE_QUANTITY)
    e = span_of(text, "Samples")
    p = span_of(text, CASE_PROPERTY)
    make = lambda **kw: Annotation(doc_id=case_document.doc_id, annot_set=1, **kw)
    return [
        make(annot_class="Quantity", annot_id="T1", span=q, surface=CASE_QUANTITY,
             attributes={"unit": "°C", "mods": ["IsRange"]}),
        make(annot_class="MeasuredEntity", annot_id="T2", span=e, surface="Samples"),
        make(annot_class="MeasuredProperty", annot_id="T3", span=p, surface=CASE_PROPERTY),
        make(annot_class="HasQuantity", annot_id="R1", source_id="T2", target_id="T1"),
        make(annot_class="HasProperty", annot_id="R2", source_id="T2", target_id="T3"),
    ]


@pytest.fixture
def case_gold_groups(case_gold_annotations):
    groups, orphans = assemble_groups(case_gold_annotations)
    assert not orphans
    return groups


@pytest.fixture
def case_corpus(case_document, case_gold_annotations) -> Corpus:
    corpus = Corpus(documents={case_document.doc_id: case_document})
    for a in case_gold_annotations:
        corpus.add(a)
    corpus.validate()
    return corpus


def corpus_tsv(corpus: Corpus) -> str:
    from measqc.annotations import write_measeval_tsv

    return write_measeval_tsv(corpus)


def jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
