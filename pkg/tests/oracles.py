"""Independent reference implementations used to check the library.

Everything here is deliberately naive: exhaustive enumeration, literal
recounts, and arbitrary-precision arithmetic. None of it shares code with
the implementations under test.
"""

from __future__ import annotations

import itertools
from collections import Counter

import mpmath
import numpy as np


def brute_force_matching_credit(weights: list[list[float]]) -> float:
    """Best total credit over every one-to-one matching, by enumeration."""
    n_pred = len(weights)
    n_gold = len(weights[0]) if n_pred else 0
    if n_pred == 0 or n_gold == 0:
        return 0.0
    best = 0.0
    k = min(n_pred, n_gold)
    for rows in itertools.permutations(range(n_pred), k):
        for cols in itertools.combinations(range(n_gold), k):
            credit = sum(weights[r][c] for r, c in zip(rows, cols))
            if credit > best:
                best = credit
    return best


def naive_tokens(text: str) -> list[str]:
    """The stated tokenizer, written as a character scan instead of a regex."""
    tokens: list[str] = []
    current = ""
    for ch in text:
        if ch.isspace():
            if current:
                tokens.append(current)
                current = ""
        elif ("a" <= ch <= "z") or ("A" <= ch <= "Z") or ("0" <= ch <= "9"):
            current += ch
        else:
            if current:
                tokens.append(current)
                current = ""
            tokens.append(ch)
    if current:
        tokens.append(current)
    return tokens


def naive_token_prf(pred: str, gold: str) -> tuple[float, float, float]:
    p_tokens = naive_tokens(pred)
    g_tokens = naive_tokens(gold)
    if not p_tokens and not g_tokens:
        return 1.0, 1.0, 1.0
    if not p_tokens or not g_tokens:
        return 0.0, 0.0, 0.0
    remaining = list(g_tokens)
    overlap = 0
    for t in p_tokens:
        if t in remaining:
            remaining.remove(t)
            overlap += 1
    precision = overlap / len(p_tokens)
    recall = overlap / len(g_tokens)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def coincidence_matrix_alpha(a: list, b: list) -> float:
    """Krippendorff alpha computed from an explicitly built coincidence matrix."""
    labels = sorted(set(a) | set(b), key=repr)
    index = {label: i for i, label in enumerate(labels)}
    k = len(labels)
    matrix = np.zeros((k, k))
    for va, vb in zip(a, b):
        matrix[index[va], index[vb]] += 1
        matrix[index[vb], index[va]] += 1
    n = matrix.sum()
    if n == 0:
        return 1.0
    marginals = matrix.sum(axis=1)
    observed = (matrix.sum() - np.trace(matrix)) / n
    expected = (
        sum(
            marginals[i] * marginals[j]
            for i in range(k)
            for j in range(k)
            if i != j
        )
        / (n * (n - 1))
    )
    if expected == 0:
        return 1.0
    return float(1.0 - observed / expected)


def shannon_bits_mpmath(probs: list[float], precision: int = 80) -> float:
    """Arbitrary-precision Shannon entropy in bits."""
    with mpmath.workdps(precision):
        total = mpmath.mpf(0)
        for p in probs:
            mp = mpmath.mpf(repr(p))
            total -= mp * mpmath.log(mp) / mpmath.log(2)
        return float(total)


def pow10_decimal(mantissa: str, exponent: int):
    """Independent big-decimal evaluation of mantissa x 10^exponent."""
    from decimal import Decimal

    sign = 1
    digits = mantissa
    if digits.startswith(("-", "+")):
        sign = -1 if digits[0] == "-" else 1
        digits = digits[1:]
    if "." in digits:
        whole, frac = digits.split(".")
    else:
        whole, frac = digits, ""
    scaled = int(whole + frac) if (whole + frac) else 0
    return Decimal(sign * scaled).scaleb(exponent - len(frac))


def naive_sentence_segments(text: str) -> list[str]:
    """Punctuation-delimited segments, with no abbreviation machinery.

    Only valid as an oracle on fixtures that contain no abbreviations or
    decimal points.
    """
    segments = []
    current = ""
    for ch in text:
        current += ch
        if ch in ".!?":
            if current.strip():
                segments.append(current.strip())
            current = ""
    if current.strip():
        segments.append(current.strip())
    return segments


def canonical_tag_sequence_check(generation: str) -> bool:
    """Is the generation's tag sequence exactly the canonical one?"""
    import re

    names = [
        "ARABIC-QUANTITY", "NUMERIC-QUANTITY", "TIME-QUANTITY",
        "CHANGE-QUANTITY", "FORMULA-QUANTITY", "CONCLUSION",
    ]
    found = re.findall(r"</?(?:%s)>" % "|".join(names), generation)
    expected = []
    for name in names:
        expected.append(f"<{name}>")
        expected.append(f"</{name}>")
    return found == expected


def _naive_pair_credit(pred, gold, criterion: str) -> float:
    if criterion == "strict":
        return 1.0 if (pred.span and gold.span and pred.span == gold.span) else 0.0
    if pred.span and gold.span:
        if pred.span.end <= gold.span.start or gold.span.end <= pred.span.start:
            return 0.0
    return naive_token_prf(pred.surface, gold.surface)[2]


def _naive_best_matching(preds, golds, weight):
    """(credit, pairs) by exhaustive enumeration; pairs exclude zero weights."""
    k = min(len(preds), len(golds))
    best = (0.0, [])
    if k == 0:
        return best
    for rows in itertools.permutations(range(len(preds)), k):
        for cols in itertools.combinations(range(len(golds)), k):
            pairs = [(r, c) for r, c in zip(rows, cols) if weight(preds[r], golds[c]) > 0]
            credit = sum(weight(preds[r], golds[c]) for r, c in pairs)
            if credit > best[0] + 1e-15:
                best = (credit, pairs)
    return best


def _prf(credit: float, n_pred: int, n_gold: int):
    if n_pred == 0 and n_gold == 0:
        return 1.0, 1.0, 1.0
    p = credit / n_pred if n_pred else 0.0
    r = credit / n_gold if n_gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def naive_score_report(pred_corpus, gold_corpus, criterion: str = "relaxed") -> dict:
    """Second, fully independent scorer: per-class (P, R, F1) plus overall."""
    span_classes = ("Quantity", "MeasuredEntity", "MeasuredProperty", "Qualifier")
    relation_classes = ("HasQuantity", "HasProperty", "Qualifies")
    tallies = {
        c: [0.0, 0, 0]
        for c in span_classes + ("Unit", "Modifier") + relation_classes
    }
    weight = lambda p, g: _naive_pair_credit(p, g, criterion)

    for doc_id in gold_corpus.annotations:
        preds = pred_corpus.annotations.get(doc_id, [])
        golds = gold_corpus.annotations.get(doc_id, [])
        cls_of = lambda annots, c: [a for a in annots if a.annot_class == c]
        quantity_pairs = []
        for c in span_classes:
            p_list, g_list = cls_of(preds, c), cls_of(golds, c)
            credit, pairs = _naive_best_matching(p_list, g_list, weight)
            if c == "Quantity":
                quantity_pairs = [(p_list[r], g_list[col]) for r, col in pairs]
            tallies[c][0] += credit
            tallies[c][1] += len(p_list)
            tallies[c][2] += len(g_list)
        # attributes over matched quantity pairs
        p_q, g_q = cls_of(preds, "Quantity"), cls_of(golds, "Quantity")
        norm = lambda s: " ".join(s.split())
        tallies["Unit"][1] += sum(1 for a in p_q if a.attributes.get("unit"))
        tallies["Unit"][2] += sum(1 for a in g_q if a.attributes.get("unit"))
        tallies["Modifier"][1] += sum(1 for a in p_q if a.attributes.get("mods"))
        tallies["Modifier"][2] += sum(1 for a in g_q if a.attributes.get("mods"))
        for p, g in quantity_pairs:
            pu, gu = p.attributes.get("unit"), g.attributes.get("unit")
            if pu and gu and norm(str(pu)) == norm(str(gu)):
                tallies["Unit"][0] += 1
            pm, gm = p.attributes.get("mods"), g.attributes.get("mods")
            if pm and gm and set(pm) == set(gm):
                tallies["Modifier"][0] += 1
        # relations from annot_set partitions
        def relation_pairs(annots):
            by_id = {a.annot_id: a for a in annots}
            out = {c: [] for c in relation_classes}
            for a in annots:
                if a.annot_class in relation_classes:
                    src, tgt = by_id.get(a.source_id), by_id.get(a.target_id)
                    if src is not None and tgt is not None:
                        out[a.annot_class].append((src, tgt))
            return out

        pred_rel, gold_rel = relation_pairs(preds), relation_pairs(golds)
        for c in relation_classes:
            rel_weight = lambda p, g: weight(p[0], g[0]) * weight(p[1], g[1])
            credit, _ = _naive_best_matching(pred_rel[c], gold_rel[c], rel_weight)
            tallies[c][0] += credit
            tallies[c][1] += len(pred_rel[c])
            tallies[c][2] += len(gold_rel[c])

    per_class = {c: _prf(*tallies[c]) for c in tallies}
    overall = sum(v[2] for v in per_class.values()) / len(per_class)
    return {"per_class": per_class, "overall": overall}


def exact_surface_precision(pred_surfaces: list[str], gold_surfaces: list[str]) -> float:
    """One-to-one exact-match precision after whitespace collapsing."""
    if not pred_surfaces:
        return 0.0
    norm = lambda s: " ".join(s.split())
    pred = Counter(norm(s) for s in pred_surfaces)
    gold = Counter(norm(s) for s in gold_surfaces)
    matched = sum(min(c, gold[s]) for s, c in pred.items())
    return matched / len(pred_surfaces)
