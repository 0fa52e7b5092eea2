"""Composite reward for the quantity-extraction phase.

Four terms over one generation, each targeting a hallucination family:

* format  — 1 iff the six-section schema is intact (binary gate);
* scope   — penalizes predictions that fire out-of-scope patterns, plus a
  bonus proportional to exact-surface answer precision against gold;
* fabrication — penalizes predictions that do not parse as quantities;
* misclassification — mean token F1 over matched prediction/gold pairs
  minus a penalty on lost token precision (over-long spans).

The total is exactly the weighted sum of the four reported terms; all
coefficients live in the run configuration and are echoed with every batch.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .matching import max_credit_matching
from .quantities import QuantityParser, default_parser
from .scoring import token_prf
from .textutil import normalize_ws
from .traces import (
    ConclusionRow,
    check_quantity_format,
    extract_conclusion_body,
    parse_conclusion_rows,
)


@dataclass(frozen=True)
class QuantityRewardConfig:
    weight_format: float = 1.0
    weight_scope: float = 1.0
    weight_fabrication: float = 1.0
    weight_misclassification: float = 1.0
    scope_hit_penalty: float = 0.5
    answer_precision_bonus: float = 1.0
    fabrication_penalty: float = 0.5
    precision_penalty: float = 0.5
    exact_answer_match: bool = True

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, bool) and value < 0:
                raise ConfigError(f"{f.name} must be nonnegative")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "QuantityRewardConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ConfigError(f"unknown quantity reward keys: {sorted(unknown)}")
        return cls(**mapping)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-term values, their weights, the weighted total, and evidence."""

    terms: dict[str, float]
    weights: dict[str, float]
    total: float
    evidence: dict[str, object] = field(default_factory=dict)

    def to_record(self) -> dict:
        breakdown = {name: value for name, value in self.terms.items()}
        breakdown["total"] = self.total
        return {"breakdown": breakdown, "evidence": self.evidence}


def _combine(terms: dict[str, float], weights: dict[str, float], evidence: dict) -> RewardBreakdown:
    terms = {name: value + 0.0 for name, value in terms.items()}  # no -0.0 in output
    total = sum(weights[name] * terms[name] for name in terms)
    return RewardBreakdown(terms=terms, weights=weights, total=total + 0.0, evidence=evidence)


def _gold_surfaces(golds) -> list[str]:
    return [g if isinstance(g, str) else g.surface for g in golds]


def reward_format(generation: str) -> float:
    return 1.0 if check_quantity_format(generation).well_formed else 0.0


def answer_precision(
    predictions: list[ConclusionRow],
    gold_surfaces: list[str],
    exact: bool = True,
) -> float:
    """Precision of predicted surfaces against gold surfaces.

    Exact mode counts one-to-one matches of whitespace-normalized surfaces;
    relaxed mode is matched token-F1 credit over the prediction count.
    Empty predictions give 0.
    """
    if not predictions:
        return 0.0
    if exact:
        pred_counts = Counter(normalize_ws(p.surface) for p in predictions)
        gold_counts = Counter(normalize_ws(s) for s in gold_surfaces)
        matched = sum((pred_counts & gold_counts).values())
        return matched / len(predictions)
    weights = [
        [token_prf(p.surface, g)[2] for g in gold_surfaces] for p in predictions
    ]
    credit, _ = max_credit_matching(weights)
    return credit / len(predictions)


def reward_scope(
    predictions: list[ConclusionRow],
    gold_surfaces: list[str],
    config: QuantityRewardConfig,
    parser: QuantityParser | None = None,
) -> tuple[float, dict]:
    parser = parser or default_parser()
    flagged = []
    for p in predictions:
        hits = parser.out_of_scope_hits(p.surface)
        if hits:
            flagged.append(
                {"surface": p.surface, "patterns": sorted({pat.pattern_id for pat, _ in hits})}
            )
    p_ans = answer_precision(predictions, gold_surfaces, exact=config.exact_answer_match)
    value = -config.scope_hit_penalty * len(flagged) + config.answer_precision_bonus * p_ans
    return value, {"out_of_scope": flagged, "answer_precision": p_ans}


def reward_fabrication(
    predictions: list[ConclusionRow],
    config: QuantityRewardConfig,
    parser: QuantityParser | None = None,
) -> tuple[float, dict]:
    parser = parser or default_parser()
    unparseable = [p.surface for p in predictions if parser.validate_span(p.surface) is None]
    return -config.fabrication_penalty * len(unparseable), {"unparseable": unparseable}


def reward_misclassification(
    predictions: list[ConclusionRow],
    gold_surfaces: list[str],
    config: QuantityRewardConfig,
) -> tuple[float, dict]:
    """Mean token F1 over matched pairs minus the penalty on lost precision.

    Pairing is the optimal one-to-one matching on token-F1 weights (the
    relaxed criterion without offsets); no matched pairs means both means
    are zero, so the empty case yields -precision_penalty.
    """
    weights = [
        [token_prf(p.surface, g)[2] for g in gold_surfaces] for p in predictions
    ]
    _, pairs = max_credit_matching(weights)
    matched = []
    for pi, gi in pairs:
        precision, _, f1 = token_prf(predictions[pi].surface, gold_surfaces[gi])
        matched.append({"predicted": predictions[pi].surface, "gold": gold_surfaces[gi],
                        "precision": precision, "f1": f1})
    if matched:
        mean_f1 = sum(m["f1"] for m in matched) / len(matched)
        mean_precision = sum(m["precision"] for m in matched) / len(matched)
    else:
        mean_f1 = 0.0
        mean_precision = 0.0
    value = mean_f1 - config.precision_penalty * (1.0 - mean_precision)
    return value, {"matched": matched, "mean_f1": mean_f1, "mean_precision": mean_precision}


def total_reward(
    generation: str,
    golds,
    config: QuantityRewardConfig | None = None,
    parser: QuantityParser | None = None,
) -> RewardBreakdown:
    """The full quantity-phase breakdown for one generation.

    ``golds`` is the document's gold quantities (annotations, conclusion
    rows, or plain surfaces). Malformed generations flow through with
    format 0; the other terms are computed on whatever parsed.
    """
    config = config or QuantityRewardConfig()
    parser = parser or default_parser()
    gold_surfaces = _gold_surfaces(golds)
    body = extract_conclusion_body(generation)
    predictions, _ = parse_conclusion_rows(body) if body is not None else ([], [])

    fmt = reward_format(generation)
    scope, scope_ev = reward_scope(predictions, gold_surfaces, config, parser)
    fab, fab_ev = reward_fabrication(predictions, config, parser)
    mis, mis_ev = reward_misclassification(predictions, gold_surfaces, config)

    terms = {
        "format": fmt,
        "scope": scope,
        "fabrication": fab,
        "misclassification": mis,
    }
    weights = {
        "format": config.weight_format,
        "scope": config.weight_scope,
        "fabrication": config.weight_fabrication,
        "misclassification": config.weight_misclassification,
    }
    evidence = {
        "predictions": [p.surface for p in predictions],
        "scope": scope_ev,
        "fabrication": fab_ev,
        "misclassification": mis_ev,
    }
    return _combine(terms, weights, evidence)
