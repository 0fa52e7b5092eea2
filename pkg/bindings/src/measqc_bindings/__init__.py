"""In-process bindings for training-loop integration.

Five entry points over the measqc core — validate_span, extract_quantities,
the two reward totals, and score_report — each returning exactly the record
the CLI would emit for the same inputs, plus batch variants that accept
lists to amortize call overhead in rollout scoring.

The layer is stateless: it holds no mutable globals, never blocks on shared
state, and is safe to call concurrently from multiple threads. Core errors
propagate unchanged with the core's message.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import measqc
from measqc.cli import (
    _quantity_record,
    reward_quantity_records,
    reward_relation_records,
    score_report_dict,
)
from measqc.errors import ConfigError
from measqc.quantities import default_parser
from measqc.reward_quantity import QuantityRewardConfig, total_reward
from measqc.reward_relation import RelationRewardConfig

__version__ = measqc.__version__

_PHASES = {"quantity": QuantityRewardConfig, "relation": RelationRewardConfig}


class BoundConfig:
    """A validated plain-mapping view of one phase's reward configuration.

    Unknown keys are rejected at construction; there are no silent
    defaults beyond the core's documented ones.
    """

    def __init__(self, phase: str, mapping: Mapping | None = None):
        if phase not in _PHASES:
            raise ConfigError(f"unknown reward phase {phase!r}")
        self.phase = phase
        self.mapping = dict(mapping or {})
        _PHASES[phase].from_mapping(self.mapping)  # validation only

    def resolved(self) -> dict:
        return _PHASES[self.phase].from_mapping(self.mapping).to_dict()


def _mapping_for(phase: str, config) -> dict:
    if config is None:
        return {}
    if isinstance(config, BoundConfig):
        if config.phase != phase:
            raise ConfigError(
                f"config is for phase {config.phase!r}, expected {phase!r}"
            )
        return config.mapping
    return dict(config)


def validate_span(candidate: str) -> dict:
    """The CLI's candidate record: parse result plus out-of-scope hits."""
    parser = default_parser()
    parsed = parser.validate_span(candidate)
    return {
        "candidate": candidate,
        "parsed": _quantity_record(parsed) if parsed else None,
        "out_of_scope": sorted(
            {p.pattern_id for p, _ in parser.out_of_scope_hits(candidate)}
        ),
    }


def validate_span_batch(candidates: Sequence[str]) -> list[dict]:
    return [validate_span(c) for c in candidates]


def extract_quantities(doc_id: str, text: str) -> list[dict]:
    """Per-quantity records identical to the CLI parse output."""
    return [
        {"doc_id": doc_id, **_quantity_record(q)}
        for q in default_parser().extract(text)
    ]


def extract_quantities_batch(documents: Mapping[str, str]) -> list[dict]:
    records = []
    for doc_id in sorted(documents):
        if documents[doc_id].strip():
            records.extend(extract_quantities(doc_id, documents[doc_id]))
    return records


def reward_quantity(generation: str, gold_rows: Sequence, config=None) -> dict:
    """Breakdown mapping for one generation against gold quantity rows.

    ``gold_rows`` may be surfaces, conclusion rows, or annotations; the
    result equals the CLI record for the same generation minus doc_id.
    """
    mapping = _mapping_for("quantity", config)
    breakdown = total_reward(
        generation, list(gold_rows), QuantityRewardConfig.from_mapping(mapping)
    )
    return breakdown.to_record()


def reward_quantity_batch(
    generations: Sequence[Mapping], gold_tsv: str, config=None, jobs: int = 1
) -> list[dict]:
    """Exactly the CLI's per-record output for a generations batch."""
    return reward_quantity_records(
        list(generations), gold_tsv, _mapping_for("quantity", config), jobs=jobs
    )


def reward_relation_batch(
    generations: Sequence[Mapping],
    gold_tsv: str,
    documents: Mapping[str, str],
    config=None,
    jobs: int = 1,
) -> list[dict]:
    """Exactly the CLI's per-record output for a narrative batch."""
    return reward_relation_records(
        list(generations), gold_tsv, dict(documents),
        _mapping_for("relation", config), jobs=jobs,
    )


def reward_relation(
    generation: str, doc_id: str, document_text: str, gold_tsv: str, config=None
) -> dict:
    record = reward_relation_batch(
        [{"doc_id": doc_id, "generation": generation}],
        gold_tsv,
        {doc_id: document_text},
        config,
    )[0]
    return {"breakdown": record["breakdown"], "evidence": record["evidence"]}


def score(
    pred_tsv: str,
    gold_tsv: str,
    criterion: str = "relaxed",
    documents: Mapping[str, str] | None = None,
    relaxed_binary: bool = False,
    overall: str = "macro",
) -> dict:
    """The CLI's score report payload, protocol block included."""
    return score_report_dict(
        pred_tsv, gold_tsv, criterion,
        dict(documents) if documents else None,
        relaxed_binary=relaxed_binary, overall_mode=overall,
    )


__all__ = [
    "BoundConfig",
    "__version__",
    "extract_quantities",
    "extract_quantities_batch",
    "reward_quantity",
    "reward_quantity_batch",
    "reward_relation",
    "reward_relation_batch",
    "score",
    "validate_span",
    "validate_span_batch",
]
