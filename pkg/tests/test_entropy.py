from __future__ import annotations

import math
import random

import pytest

from measqc.entropy import (
    TokenRecord,
    TraceSample,
    compute_stats,
    extract_bracket_segments,
    token_entropy,
)
from measqc.errors import ValidationError

from .conftest import TOP5_AFTER, TOP5_BEFORE
from .oracles import shannon_bits_mpmath


def test_case_distribution_value():
    assert token_entropy(list(TOP5_BEFORE)) == pytest.approx(1.39, abs=0.01)


def test_one_hot_is_zero():
    assert token_entropy([1.0]) == 0.0


def test_low_entropy_distribution_below_threshold():
    value = token_entropy(list(TOP5_AFTER))
    assert value == pytest.approx(shannon_bits_mpmath(list(TOP5_AFTER)), abs=1e-9)
    assert value < 1.0


def test_arbitrary_precision_oracle_random():
    rng = random.Random(13)
    for _ in range(100):
        raw = [rng.random() for _ in range(rng.randint(1, 6))]
        total = sum(raw)
        probs = sorted((p / total for p in raw), reverse=True)
        assert token_entropy(probs) == pytest.approx(
            shannon_bits_mpmath(probs), abs=1e-9
        )


def test_entropy_permutation_invariant():
    probs = [0.5, 0.3, 0.2]
    assert token_entropy(probs) == pytest.approx(token_entropy(probs[::-1]))


def test_nonpositive_probability_rejected():
    with pytest.raises(ValidationError):
        token_entropy([0.5, 0.0])
    with pytest.raises(ValidationError):
        token_entropy([-0.1])
    with pytest.raises(ValidationError):
        token_entropy([0.9, 0.9])


def _tok(text: str, probs: tuple[float, ...] = (1.0,)) -> TokenRecord:
    return TokenRecord(token=text, top_k=tuple((f"c{i}", p) for i, p in enumerate(probs)))


def test_token_record_checks_declared_entropy():
    TokenRecord(token="x", top_k=(("x", 0.5), ("y", 0.5)), entropy=1.0)
    with pytest.raises(ValidationError):
        TokenRecord(token="x", top_k=(("x", 0.5), ("y", 0.5)), entropy=0.3)
    with pytest.raises(ValidationError):
        TokenRecord(token="x", top_k=(("x", 0.2), ("y", 0.8)))  # not nonincreasing


def test_segment_extraction_roles():
    tokens = [
        _tok("surface form "), _tok("["), _tok("70 m"), _tok("]"),
        _tok(" describe the entity "), _tok("["), _tok("Samples", TOP5_BEFORE), _tok("]"),
    ]
    segments, unmatched = extract_bracket_segments(tokens)
    assert unmatched == []
    assert [(s.role, s.text) for s in segments] == [
        ("Quantity", "70 m"), ("MeasuredEntity", "Samples"),
    ]
    assert segments[1].max_entropy == pytest.approx(1.39, abs=0.01)


def test_no_brackets_no_segments():
    segments, unmatched = extract_bracket_segments([_tok("just words here")])
    assert segments == []
    assert unmatched == []


def test_unmatched_brackets_reported():
    segments, unmatched = extract_bracket_segments([_tok("open [ only")])
    assert segments == []
    assert len(unmatched) == 1


def test_boundary_tokens_excluded():
    # "[70" straddles the opening bracket: the numeral is a boundary token
    tokens = [_tok("surface form "), _tok("[70"), _tok(" m"), _tok("]")]
    segments, _ = extract_bracket_segments(tokens)
    assert [t.token for t in segments[0].tokens] == [" m"]


def _sample(sample_id: str, entropies: list[float], role: str = "Quantity") -> TraceSample:
    cue = "surface form " if role == "Quantity" else "describe the entity "
    tokens = [_tok(cue)]
    tokens.append(_tok("["))
    for i, h in enumerate(entropies):
        if h == 0.0:
            tokens.append(_tok(f"w{i} ", (1.0,)))
        else:
            p = _p_for_entropy(h)
            rest = (1.0 - p) / 3
            tokens.append(_tok(f"w{i} ", (p, rest, rest, rest)))
    tokens.append(_tok("]"))
    return TraceSample(sample_id=sample_id, tokens=tuple(tokens))


def _four_way_entropy(p: float) -> float:
    rest = (1.0 - p) / 3
    return -(p * math.log2(p) + 3 * rest * math.log2(rest))


def _p_for_entropy(h: float) -> float:
    # bisect the head probability of a 4-candidate (p, r, r, r) family,
    # whose entropy spans (0, 2] monotonically on p in [0.25, 1)
    assert 0 < h <= 2.0
    lo, hi = 0.25, 1.0 - 1e-12
    for _ in range(80):
        mid = (lo + hi) / 2
        if _four_way_entropy(mid) > h:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def test_stats_zero_entropy_sample():
    stats = compute_stats([_sample("s", [0.0, 0.0])], tau=1.0)
    q = stats["quantity"]
    assert (q.mean_entropy, q.entropy_std, q.spike_rate, q.sample_spike_ratio) == (
        0.0, 0.0, 0.0, 0.0,
    )
    assert stats["relation"] is None


def test_stats_single_spike_forces_ones():
    stats = compute_stats([_sample("s", [1.3])], tau=1.0)
    q = stats["quantity"]
    assert q.spike_rate == 1.0
    assert q.sample_spike_ratio == 1.0


def test_stats_match_direct_recount():
    rng = random.Random(20240811)
    samples = []
    planted: dict[str, list[list[float]]] = {"quantity": [], "relation": []}
    for i in range(10):
        role = "Quantity" if i % 2 == 0 else "MeasuredEntity"
        group = "quantity" if role == "Quantity" else "relation"
        entropies = [round(rng.uniform(0.0, 1.6), 3) for _ in range(rng.randint(1, 5))]
        planted[group].append(entropies)
        samples.append(_sample(f"s{i}", entropies, role))
    tau = 0.9
    stats = compute_stats(samples, tau=tau)
    for group in ("quantity", "relation"):
        pooled = [h for bracket in planted[group] for h in bracket]
        got = stats[group]
        mean = sum(pooled) / len(pooled)
        # recount uses achieved entropies (within solver tolerance of planted)
        assert got.mean_entropy == pytest.approx(mean, abs=1e-6)
        var = sum((h - mean) ** 2 for h in pooled) / len(pooled)
        assert got.entropy_std == pytest.approx(math.sqrt(var), abs=1e-6)
        spiking = sum(1 for bracket in planted[group] if any(h > tau for h in bracket))
        assert got.spike_rate == pytest.approx(spiking / len(planted[group]))
        assert got.sample_spike_ratio == pytest.approx(spiking / len(samples))
        assert got.n_brackets == len(planted[group])
        assert got.n_tokens == len(pooled)


def test_threshold_monotonicity():
    rng = random.Random(5)
    samples = [
        _sample(f"s{i}", [rng.uniform(0, 1.8) for _ in range(3)]) for i in range(8)
    ]
    taus = [0.2, 0.6, 1.0, 1.4, 1.8]
    rates = []
    ratios = []
    for tau in taus:
        stats = compute_stats(samples, tau=tau)["quantity"]
        rates.append(stats.spike_rate)
        ratios.append(stats.sample_spike_ratio)
    assert rates == sorted(rates, reverse=True)
    assert ratios == sorted(ratios, reverse=True)


def test_pooling_is_token_weighted():
    a = _sample("a", [0.2, 0.2, 0.2])
    b = _sample("b", [1.0])
    stats = compute_stats([a, b], tau=2.0)["quantity"]
    assert stats.mean_entropy == pytest.approx((3 * 0.2 + 1 * 1.0) / 4, abs=1e-6)


def test_std_over_brackets_flag():
    a = _sample("a", [0.4, 0.4])
    b = _sample("b", [1.2])
    token_std = compute_stats([a, b], tau=2.0, std_over="tokens")["quantity"].entropy_std
    bracket_std = compute_stats([a, b], tau=2.0, std_over="brackets")["quantity"].entropy_std
    assert token_std != bracket_std


def test_invalid_tau_rejected():
    with pytest.raises(ValidationError):
        compute_stats([], tau=0.0)
