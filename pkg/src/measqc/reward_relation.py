"""Composite reward for the relation-extraction phase.

Three terms over one narrative generation:

* format — 1 iff the narrative is well-formed, grounded, and carries at
  least one evidence sentence;
* completeness — stepwise credit for every gold component recovered by its
  aligned predicted group, a closure bonus when the whole gold group is
  recovered, plus a weighted per-class F1 exploration term that prioritizes
  the hard classes (qualifiers, entities, properties);
* misclassification — pooled token F1 of the role-paired components minus
  the penalty on lost token precision (over-broad spans).

Groups align one-to-one on their quantity spans (best relaxed overlap,
ties to the earliest gold start offset).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, fields

from .annotations import Document, MeasurementGroup
from .errors import ConfigError
from .matching import max_credit_matching
from .narratives import RelationNarrative, parse_relation_narrative
from .reward_quantity import RewardBreakdown, _combine
from .scoring import (
    MatchCriterion,
    _attribute_tallies,
    _ClassTally,
    match_spans,
    pair_credit,
    token_prf,
)
from .textutil import tokenize
from .traces import FormatVerdict

SPAN_COMPONENT_CLASSES = ("MeasuredEntity", "MeasuredProperty", "Qualifier")
DEFAULT_COMPONENT_WEIGHTS = {
    "Quantity": 1.0,
    "Unit": 1.0,
    "Modifier": 1.0,
    "MeasuredEntity": 2.0,
    "MeasuredProperty": 2.0,
    "Qualifier": 3.0,
}


@dataclass(frozen=True)
class RelationRewardConfig:
    weight_format: float = 1.0
    weight_completeness: float = 1.0
    weight_misclassification: float = 1.0
    step_bonus: float = 0.2
    closure_bonus: float = 1.0
    exploration_weight: float = 0.5
    recovery_threshold: float = 0.5
    component_weights: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_COMPONENT_WEIGHTS)
    )

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, dict):
                missing = set(DEFAULT_COMPONENT_WEIGHTS) - set(value)
                if missing:
                    raise ConfigError(f"component_weights misses {sorted(missing)}")
                if any(v < 0 for v in value.values()):
                    raise ConfigError("component weights must be nonnegative")
            elif value < 0:
                raise ConfigError(f"{f.name} must be nonnegative")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RelationRewardConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ConfigError(f"unknown relation reward keys: {sorted(unknown)}")
        mapping = dict(mapping)
        if "component_weights" in mapping:
            merged = dict(DEFAULT_COMPONENT_WEIGHTS)
            extra = set(mapping["component_weights"]) - set(merged)
            if extra:
                raise ConfigError(f"unknown component classes: {sorted(extra)}")
            merged.update(mapping["component_weights"])
            mapping["component_weights"] = merged
        return cls(**mapping)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class AlignedPair:
    pred_index: int
    gold_index: int
    quantity_credit: float
    component_credits: dict[str, float]


@dataclass(frozen=True)
class GroupAlignment:
    pairs: tuple[AlignedPair, ...]
    unmatched_pred: tuple[int, ...]
    unmatched_gold: tuple[int, ...]


def _qualifier_pairs(
    pred_group: MeasurementGroup, gold_group: MeasurementGroup
) -> list[tuple[int, int, float]]:
    weights = [
        [token_prf(p.surface, g.surface)[2] for g in gold_group.qualifiers]
        for p in pred_group.qualifiers
    ]
    _, pairs = max_credit_matching(weights)
    return [(pi, gi, weights[pi][gi]) for pi, gi in pairs]


def component_credits(
    pred_group: MeasurementGroup, gold_group: MeasurementGroup
) -> dict[str, float]:
    """Recovery credit for every component the gold group carries.

    Entity/property/qualifier credit is surface token F1 (0 when the
    prediction lacks the component); unit credit is token F1 of the unit
    strings; the modifier set earns its set-overlap F1.
    """
    credits: dict[str, float] = {}
    gold_q, pred_q = gold_group.quantity, pred_group.quantity
    if gold_q.unit:
        credits["unit"] = token_prf(pred_q.unit or "", gold_q.unit)[2]
    if gold_q.modifiers:
        pred_mods, gold_mods = set(pred_q.modifiers), set(gold_q.modifiers)
        credits["modifiers"] = (
            2 * len(pred_mods & gold_mods) / (len(pred_mods) + len(gold_mods))
            if pred_mods or gold_mods
            else 1.0
        )
    if gold_group.measured_entity is not None:
        pred_surface = pred_group.measured_entity.surface if pred_group.measured_entity else ""
        credits["entity"] = token_prf(pred_surface, gold_group.measured_entity.surface)[2]
    if gold_group.measured_property is not None:
        pred_surface = pred_group.measured_property.surface if pred_group.measured_property else ""
        credits["property"] = token_prf(pred_surface, gold_group.measured_property.surface)[2]
    if gold_group.qualifiers:
        matched = {gi: w for _, gi, w in _qualifier_pairs(pred_group, gold_group)}
        for gi in range(len(gold_group.qualifiers)):
            credits[f"qualifier[{gi}]"] = matched.get(gi, 0.0)
    return credits


def align_groups(
    pred_groups: list[MeasurementGroup], gold_groups: list[MeasurementGroup]
) -> GroupAlignment:
    """One-to-one alignment keyed on quantity spans under relaxed credit."""
    order = sorted(
        range(len(gold_groups)),
        key=lambda j: (
            gold_groups[j].quantity.span.start
            if gold_groups[j].quantity.span
            else 1 << 30,
            j,
        ),
    )
    weights = [
        [
            pair_credit(p.quantity, gold_groups[j].quantity, MatchCriterion.RELAXED)
            for j in order
        ]
        for p in pred_groups
    ]
    _, raw_pairs = max_credit_matching(weights)
    pairs = []
    for pi, col in raw_pairs:
        gi = order[col]
        pairs.append(
            AlignedPair(
                pred_index=pi,
                gold_index=gi,
                quantity_credit=weights[pi][col],
                component_credits=component_credits(pred_groups[pi], gold_groups[gi]),
            )
        )
    matched_pred = {p.pred_index for p in pairs}
    matched_gold = {p.gold_index for p in pairs}
    return GroupAlignment(
        pairs=tuple(sorted(pairs, key=lambda p: p.gold_index)),
        unmatched_pred=tuple(i for i in range(len(pred_groups)) if i not in matched_pred),
        unmatched_gold=tuple(j for j in range(len(gold_groups)) if j not in matched_gold),
    )


def reward_format_rel(narrative: RelationNarrative, verdict: FormatVerdict) -> float:
    """1 iff the narrative is well-formed with nonempty grounded evidence.

    Grounding failures are verdict violations, so well-formedness already
    implies every narrated surface and quoted sentence mapped to the
    document; the explicit emptiness check keeps the gate honest for
    narratives with statements but no locatable quantity.
    """
    return 1.0 if verdict.well_formed and narrative.evidence_sentences else 0.0


def _class_f1(
    pred_groups: list[MeasurementGroup], gold_groups: list[MeasurementGroup]
) -> dict[str, float]:
    """Relaxed per-class F1 over one document's groups (six span classes)."""
    def collect(groups, cls):
        out = []
        for g in groups:
            if cls == "Quantity":
                out.append(g.quantity)
            elif cls == "MeasuredEntity" and g.measured_entity is not None:
                out.append(g.measured_entity)
            elif cls == "MeasuredProperty" and g.measured_property is not None:
                out.append(g.measured_property)
            elif cls == "Qualifier":
                out.extend(g.qualifiers)
        return out

    scores: dict[str, float] = {}
    tallies = {"Unit": _ClassTally(), "Modifier": _ClassTally()}
    preds_q, golds_q = collect(pred_groups, "Quantity"), collect(gold_groups, "Quantity")
    quantity_match = match_spans(preds_q, golds_q, MatchCriterion.RELAXED)
    scores["Quantity"] = quantity_match.f1
    for cls in SPAN_COMPONENT_CLASSES:
        scores[cls] = match_spans(
            collect(pred_groups, cls), collect(gold_groups, cls), MatchCriterion.RELAXED
        ).f1
    _attribute_tallies(quantity_match, preds_q, golds_q, tallies)
    scores["Unit"] = tallies["Unit"].scores()[2]
    scores["Modifier"] = tallies["Modifier"].scores()[2]
    return scores


def reward_completeness(
    alignment: GroupAlignment,
    pred_groups: list[MeasurementGroup],
    gold_groups: list[MeasurementGroup],
    config: RelationRewardConfig,
) -> tuple[float, dict]:
    stepwise = 0.0
    closures = 0
    per_pair = []
    for pair in alignment.pairs:
        recovered = [
            name
            for name, credit in pair.component_credits.items()
            if credit >= config.recovery_threshold
        ]
        stepwise += config.step_bonus * len(recovered)
        closed = len(recovered) == len(pair.component_credits)
        if closed:
            closures += 1
        per_pair.append(
            {
                "gold_index": pair.gold_index,
                "pred_index": pair.pred_index,
                "recovered": recovered,
                "components": len(pair.component_credits),
                "closed": closed,
            }
        )
    # an empty answer explores nothing: the vacuous both-sides-absent = 1
    # convention applies only once at least one group was predicted
    if pred_groups:
        class_f1 = _class_f1(pred_groups, gold_groups)
        exploration = sum(config.component_weights[c] * f1 for c, f1 in class_f1.items())
    else:
        class_f1 = {}
        exploration = 0.0
    value = stepwise + config.closure_bonus * closures + config.exploration_weight * exploration
    evidence = {"pairs": per_pair, "class_f1": class_f1, "exploration": exploration}
    return value, evidence


def _group_has_components(group: MeasurementGroup) -> bool:
    return (
        group.measured_entity is not None
        or group.measured_property is not None
        or bool(group.qualifiers)
    )


def reward_misclassification_rel(
    alignment: GroupAlignment,
    pred_groups: list[MeasurementGroup],
    gold_groups: list[MeasurementGroup],
) -> tuple[float, dict]:
    """Pooled token F1 of role-paired span components minus lost precision.

    No pairs at all: 0 when neither side carries span components, else -1.
    """
    pred_tokens: Counter = Counter()
    gold_tokens: Counter = Counter()
    n_pairs = 0
    for pair in alignment.pairs:
        pred_g = pred_groups[pair.pred_index]
        gold_g = gold_groups[pair.gold_index]
        for attr in ("measured_entity", "measured_property"):
            p, g = getattr(pred_g, attr), getattr(gold_g, attr)
            if p is not None and g is not None:
                pred_tokens.update(tokenize(p.surface))
                gold_tokens.update(tokenize(g.surface))
                n_pairs += 1
        for pi, gi, _ in _qualifier_pairs(pred_g, gold_g):
            pred_tokens.update(tokenize(pred_g.qualifiers[pi].surface))
            gold_tokens.update(tokenize(gold_g.qualifiers[gi].surface))
            n_pairs += 1
    if n_pairs == 0:
        empty = not any(map(_group_has_components, pred_groups)) and not any(
            map(_group_has_components, gold_groups)
        )
        value = 0.0 if empty else -1.0
        return value, {"paired_components": 0}
    n_pred = sum(pred_tokens.values())
    n_gold = sum(gold_tokens.values())
    overlap = sum((pred_tokens & gold_tokens).values())
    precision = overlap / n_pred if n_pred else 0.0
    recall = overlap / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    value = f1 - (1.0 - precision)
    return value, {"paired_components": n_pairs, "token_f1": f1, "token_precision": precision}


def total_reward_rel(
    generation: str,
    document: Document,
    gold_groups: list[MeasurementGroup],
    config: RelationRewardConfig | None = None,
    cues: dict[str, str] | None = None,
) -> RewardBreakdown:
    """Full relation-phase breakdown for one narrative generation."""
    config = config or RelationRewardConfig()
    narrative, verdict = parse_relation_narrative(generation, document, cues)
    pred_groups = list(narrative.groups)
    alignment = align_groups(pred_groups, gold_groups)

    fmt = reward_format_rel(narrative, verdict)
    comp, comp_ev = reward_completeness(alignment, pred_groups, gold_groups, config)
    mis, mis_ev = reward_misclassification_rel(alignment, pred_groups, gold_groups)

    terms = {"format": fmt, "completeness": comp, "misclassification": mis}
    weights = {
        "format": config.weight_format,
        "completeness": config.weight_completeness,
        "misclassification": config.weight_misclassification,
    }
    evidence = {
        "violations": [list(v) for v in verdict.violations],
        "evidence_sentences": list(narrative.evidence_sentences),
        "completeness": comp_ev,
        "misclassification": mis_ev,
        "unmatched_gold_groups": list(alignment.unmatched_gold),
        "unmatched_pred_groups": list(alignment.unmatched_pred),
    }
    return _combine(terms, weights, evidence)
