"""Benchmark-protocol evaluation over the nine annotation classes.

Matching criteria
-----------------
Strict credits a predicted span 1.0 only on exact offsets. Relaxed allows
partial span overlap: a pair must overlap in character offsets (when both
sides carry offsets) and earns the token-level F1 of the two surfaces as
credit; ``relaxed_binary`` switches that to any-overlap = 1. Predictions
without offsets (e.g. parsed from narratives that could not be grounded)
fall back to surface token F1 under relaxed and score 0 under strict.

Unit and Modifier are scored as attributes of matched Quantities: they earn
credit only when the parent quantity pair matched, and the credit is exact
attribute equality. Relations score the product of their two endpoint span
credits, matched one-to-one against the gold relations of the same class.

The Overall column is the unweighted mean of the nine class F1 values
(macro); a micro pooled variant is available and the report records which
was used.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .annotations import (
    ANNOTATION_CLASSES,
    Annotation,
    Corpus,
    MeasurementGroup,
    RELATION_CLASSES,
)
from .errors import ValidationError
from .matching import max_credit_matching
from .textutil import normalize_ws, token_spans, tokenize


class MatchCriterion(str, Enum):
    STRICT = "strict"
    RELAXED = "relaxed"


def token_prf(predicted: str, gold: str) -> tuple[float, float, float]:
    """Token-level precision/recall/F1 with multiset intersection semantics.

    Both empty -> (1, 1, 1); exactly one empty -> (0, 0, 0).
    """
    pred_tokens = Counter(tokenize(predicted))
    gold_tokens = Counter(tokenize(gold))
    return _prf_from_counters(pred_tokens, gold_tokens)


def _prf_from_counters(pred_tokens: Counter, gold_tokens: Counter) -> tuple[float, float, float]:
    n_pred = sum(pred_tokens.values())
    n_gold = sum(gold_tokens.values())
    if n_pred == 0 and n_gold == 0:
        return 1.0, 1.0, 1.0
    if n_pred == 0 or n_gold == 0:
        return 0.0, 0.0, 0.0
    overlap = sum((pred_tokens & gold_tokens).values())
    precision = overlap / n_pred
    recall = overlap / n_gold
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def pair_credit(
    pred: Annotation,
    gold: Annotation,
    criterion: MatchCriterion,
    relaxed_binary: bool = False,
) -> float:
    """Credit of one predicted/gold span pair under the criterion."""
    if criterion is MatchCriterion.STRICT:
        if pred.span is None or gold.span is None:
            return 0.0
        return 1.0 if pred.span == gold.span else 0.0
    if pred.span is not None and gold.span is not None and not pred.span.overlaps(gold.span):
        return 0.0
    if relaxed_binary:
        return 1.0
    return token_prf(pred.surface, gold.surface)[2]


@dataclass(frozen=True)
class MatchResult:
    credit: float
    pairs: tuple[tuple[int, int, float], ...]  # (pred index, gold index, credit)
    n_pred: int
    n_gold: int

    @property
    def precision(self) -> float:
        return self.credit / self.n_pred if self.n_pred else (1.0 if not self.n_gold else 0.0)

    @property
    def recall(self) -> float:
        return self.credit / self.n_gold if self.n_gold else (1.0 if not self.n_pred else 0.0)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def match_spans(
    preds: list[Annotation],
    golds: list[Annotation],
    criterion: MatchCriterion,
    relaxed_binary: bool = False,
) -> MatchResult:
    """Optimal one-to-one matching of same-class annotations of one document."""
    classes = {a.annot_class for a in preds} | {a.annot_class for a in golds}
    if len(classes) > 1:
        raise ValidationError(f"match_spans got mixed classes {sorted(classes)}")
    docs = {a.doc_id for a in preds} | {a.doc_id for a in golds}
    if len(docs) > 1:
        raise ValidationError(f"match_spans got mixed documents {sorted(docs)}")
    weights = [
        [pair_credit(p, g, criterion, relaxed_binary) for g in golds] for p in preds
    ]
    credit, pairs = max_credit_matching(weights)
    detailed = tuple((r, c, weights[r][c]) for r, c in pairs)
    return MatchResult(credit=credit, pairs=detailed, n_pred=len(preds), n_gold=len(golds))


@dataclass
class _ClassTally:
    credit: float = 0.0
    n_pred: int = 0
    n_gold: int = 0
    matched_pairs: list[tuple[str, str, float]] = field(default_factory=list)

    def add(self, credit: float, n_pred: int, n_gold: int, pairs=()):
        self.credit += credit
        self.n_pred += n_pred
        self.n_gold += n_gold
        self.matched_pairs.extend(pairs)

    def scores(self) -> tuple[float, float, float]:
        if self.n_pred == 0 and self.n_gold == 0:
            return 1.0, 1.0, 1.0
        precision = self.credit / self.n_pred if self.n_pred else 0.0
        recall = self.credit / self.n_gold if self.n_gold else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return precision, recall, f1


@dataclass(frozen=True)
class ClassScores:
    annot_class: str
    precision: float
    recall: float
    f1: float
    credit: float
    n_pred: int
    n_gold: int
    matched_pairs: tuple[tuple[str, str, float], ...] = ()


@dataclass(frozen=True)
class ScoreReport:
    per_class: dict[str, ClassScores]
    overall: float
    criterion: MatchCriterion
    overall_mode: str
    relaxed_binary: bool

    def to_dict(self) -> dict:
        return {
            "protocol": {
                "criterion": self.criterion.value,
                "overall": self.overall_mode,
                "relaxed_binary": self.relaxed_binary,
            },
            "per_class": {
                name: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "credit": s.credit,
                    "predicted": s.n_pred,
                    "gold": s.n_gold,
                }
                for name, s in self.per_class.items()
            },
            "overall": self.overall,
        }

    def to_table(self) -> str:
        width = max(len(c) for c in ANNOTATION_CLASSES)
        lines = [
            f"{'class':<{width}}  {'P':>7}  {'R':>7}  {'F1':>7}  {'pred':>5}  {'gold':>5}"
        ]
        for name in ANNOTATION_CLASSES:
            s = self.per_class[name]
            lines.append(
                f"{name:<{width}}  {s.precision:>7.3f}  {s.recall:>7.3f}  {s.f1:>7.3f}"
                f"  {s.n_pred:>5}  {s.n_gold:>5}"
            )
        lines.append(
            f"{'Overall':<{width}}  {'':>7}  {'':>7}  {self.overall:>7.3f}"
            f"  ({self.overall_mode}, {self.criterion.value})"
        )
        return "\n".join(lines)


def _attribute_tallies(
    quantity_match: MatchResult,
    preds: list[Annotation],
    golds: list[Annotation],
    tallies: dict[str, _ClassTally],
) -> None:
    """Score Unit and Modifier as attributes of matched quantity pairs."""
    unit_pred = sum(1 for a in preds if a.unit)
    unit_gold = sum(1 for a in golds if a.unit)
    mod_pred = sum(1 for a in preds if a.modifiers)
    mod_gold = sum(1 for a in golds if a.modifiers)
    unit_credit = 0.0
    mod_credit = 0.0
    unit_pairs = []
    mod_pairs = []
    for pi, gi, _ in quantity_match.pairs:
        p, g = preds[pi], golds[gi]
        if p.unit and g.unit and normalize_ws(p.unit) == normalize_ws(g.unit):
            unit_credit += 1.0
            unit_pairs.append((p.annot_id, g.annot_id, 1.0))
        if p.modifiers and g.modifiers and set(p.modifiers) == set(g.modifiers):
            mod_credit += 1.0
            mod_pairs.append((p.annot_id, g.annot_id, 1.0))
    tallies["Unit"].add(unit_credit, unit_pred, unit_gold, unit_pairs)
    tallies["Modifier"].add(mod_credit, mod_pred, mod_gold, mod_pairs)


def _relation_endpoints(
    group_list: list[MeasurementGroup],
) -> dict[str, list[tuple[Annotation, Annotation]]]:
    """Relation class -> list of (source annotation, target annotation)."""
    out: dict[str, list[tuple[Annotation, Annotation]]] = {c: [] for c in RELATION_CLASSES}
    for group in group_list:
        members = {group.quantity.annot_id: group.quantity}
        for a in (group.measured_entity, group.measured_property, *group.qualifiers):
            if a is not None:
                members[a.annot_id] = a
        for rel in group.relations:
            src = members.get(rel.source_id)
            tgt = members.get(rel.target_id)
            if src is not None and tgt is not None:
                out[rel.annot_class].append((src, tgt))
    return out


def _relation_endpoints_by_id(
    annotations: list[Annotation],
) -> dict[str, list[tuple[Annotation, Annotation]]]:
    """Endpoint resolution over a flat annotation list, by annot_id.

    Relations stay scoreable even when their set has no surviving Quantity
    (an orphaned prediction still counts against precision).
    """
    by_id = {a.annot_id: a for a in annotations if not a.is_relation}
    out: dict[str, list[tuple[Annotation, Annotation]]] = {c: [] for c in RELATION_CLASSES}
    for a in annotations:
        if not a.is_relation:
            continue
        src, tgt = by_id.get(a.source_id), by_id.get(a.target_id)
        if src is not None and tgt is not None:
            out[a.annot_class].append((src, tgt))
    return out


def score_relations(
    pred_groups: list[MeasurementGroup],
    gold_groups: list[MeasurementGroup],
    criterion: MatchCriterion,
    relaxed_binary: bool = False,
) -> dict[str, MatchResult]:
    """Per relation class: one-to-one matching where a pair's weight is the
    product of its two endpoint span credits."""
    return _score_relation_pairs(
        _relation_endpoints(pred_groups), _relation_endpoints(gold_groups),
        criterion, relaxed_binary,
    )


def _score_relation_pairs(
    pred_rel: dict[str, list[tuple[Annotation, Annotation]]],
    gold_rel: dict[str, list[tuple[Annotation, Annotation]]],
    criterion: MatchCriterion,
    relaxed_binary: bool = False,
) -> dict[str, MatchResult]:
    results = {}
    for cls in RELATION_CLASSES:
        preds, golds = pred_rel[cls], gold_rel[cls]
        weights = [
            [
                pair_credit(ps, gs, criterion, relaxed_binary)
                * pair_credit(pt, gt, criterion, relaxed_binary)
                for gs, gt in golds
            ]
            for ps, pt in preds
        ]
        credit, pairs = max_credit_matching(weights)
        results[cls] = MatchResult(
            credit=credit,
            pairs=tuple((r, c, weights[r][c]) for r, c in pairs),
            n_pred=len(preds),
            n_gold=len(golds),
        )
    return results


_SPAN_SCORED = ("Quantity", "MeasuredEntity", "MeasuredProperty", "Qualifier")


def score_report(
    pred_corpus: Corpus,
    gold_corpus: Corpus,
    criterion: MatchCriterion = MatchCriterion.RELAXED,
    relaxed_binary: bool = False,
    overall_mode: str = "macro",
) -> ScoreReport:
    """Nine class scores plus the overall mean over a document collection.

    Documents missing from the predictions score as empty; a document with
    predictions but no gold is an error.
    """
    extra = set(pred_corpus.annotations) - set(gold_corpus.annotations)
    extra -= {d for d in extra if not pred_corpus.annotations[d]}
    if extra:
        raise ValidationError(
            "documents predicted but absent from gold: " + ", ".join(sorted(extra))
        )
    tallies = {c: _ClassTally() for c in ANNOTATION_CLASSES}
    for doc_id in sorted(gold_corpus.annotations):
        preds = pred_corpus.annotations_for(doc_id)
        golds = gold_corpus.annotations_for(doc_id)
        by_class = lambda annots, cls: [a for a in annots if a.annot_class == cls]
        quantity_match = None
        for cls in _SPAN_SCORED:
            result = match_spans(
                by_class(preds, cls), by_class(golds, cls), criterion, relaxed_binary
            )
            if cls == "Quantity":
                quantity_match = result
            p_cls, g_cls = by_class(preds, cls), by_class(golds, cls)
            tallies[cls].add(
                result.credit,
                result.n_pred,
                result.n_gold,
                [(p_cls[pi].annot_id, g_cls[gi].annot_id, w) for pi, gi, w in result.pairs],
            )
        _attribute_tallies(
            quantity_match, by_class(preds, "Quantity"), by_class(golds, "Quantity"), tallies
        )
        for cls, result in _score_relation_pairs(
            _relation_endpoints_by_id(preds), _relation_endpoints_by_id(golds),
            criterion, relaxed_binary,
        ).items():
            tallies[cls].add(result.credit, result.n_pred, result.n_gold)

    per_class = {}
    for cls in ANNOTATION_CLASSES:
        p, r, f1 = tallies[cls].scores()
        per_class[cls] = ClassScores(
            annot_class=cls,
            precision=p,
            recall=r,
            f1=f1,
            credit=tallies[cls].credit,
            n_pred=tallies[cls].n_pred,
            n_gold=tallies[cls].n_gold,
            matched_pairs=tuple(tallies[cls].matched_pairs),
        )
    if overall_mode == "macro":
        overall = sum(s.f1 for s in per_class.values()) / len(per_class)
    elif overall_mode == "micro":
        pooled = _ClassTally()
        for t in tallies.values():
            pooled.add(t.credit, t.n_pred, t.n_gold)
        overall = pooled.scores()[2]
    else:
        raise ValidationError(f"unknown overall mode {overall_mode!r}")
    return ScoreReport(
        per_class=per_class,
        overall=overall,
        criterion=criterion,
        overall_mode=overall_mode,
        relaxed_binary=relaxed_binary,
    )


def krippendorff_alpha(annotator_a: list, annotator_b: list) -> float:
    """Nominal-metric Krippendorff alpha for two annotators over aligned tokens.

    alpha = 1 - D_observed / D_expected with the small-sample n(n-1)
    correction in the expected term. All labels identical across both
    annotators (no variance) is defined as 1. Sequences of different
    length are an error.
    """
    if len(annotator_a) != len(annotator_b):
        raise ValidationError(
            f"label sequences differ in length: {len(annotator_a)} vs {len(annotator_b)}"
        )
    n_units = len(annotator_a)
    if n_units == 0:
        return 1.0
    disagreements = sum(1 for a, b in zip(annotator_a, annotator_b) if a != b)
    counts = Counter(annotator_a) + Counter(annotator_b)
    n = 2 * n_units
    expected_pairs = sum(c_a * c_b for a, c_a in counts.items() for b, c_b in counts.items() if a != b)
    if expected_pairs == 0:
        return 1.0
    observed = 2 * disagreements / n
    expected = expected_pairs / (n * (n - 1))
    return 1.0 - observed / expected


def binary_labels(labels: list, positive) -> list[str]:
    """Collapse a label sequence to the in-class/out dichotomy for one class."""
    return ["in" if label == positive else "out" for label in labels]


def token_class_labels(text: str, annotations: list[Annotation], annot_class: str) -> list[str]:
    """Per-token in/out labels for one class, using the scoring tokenizer."""
    spans = [a.span for a in annotations if a.annot_class == annot_class and a.span]
    labels = []
    for start, _end in token_spans(text):
        inside = any(s.start <= start < s.end for s in spans)
        labels.append("in" if inside else "out")
    return labels
