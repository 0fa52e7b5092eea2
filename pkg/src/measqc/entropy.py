"""Bracket-entropy diagnostics over token-probability traces.

A trace is the tokenized generation with a top-k candidate distribution per
token. The analyzer reconstructs the text, locates bracketed extraction
fields, assigns each a semantic role from the nearest preceding cue phrase
(the same cue table the narrative parser uses), and pools Shannon entropies
per role group:

* quantity group: Quantity, Unit, Modifier
* relation group: MeasuredEntity, MeasuredProperty, Qualifier

Statistics per group: mean bracket-token entropy, its std (population, over
tokens by default or over per-bracket means), the fraction of brackets
containing at least one token above the spike threshold, and the fraction
of samples containing at least one such bracket. Entropy is computed over
the provided top-k mass only; residual mass is ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .lexicon import load_narrative_cues
from .narratives import cue_pattern

QUANTITY_GROUP = ("Quantity", "Unit", "Modifier")
RELATION_GROUP = ("MeasuredEntity", "MeasuredProperty", "Qualifier")

_ENTROPY_CHECK_TOLERANCE = 1e-6
# published top-k tables are rounded to 3-4 significant digits, so a listed
# distribution may overshoot probability one by a few 1e-4
_SUM_TOLERANCE = 1e-3


def token_entropy(distribution: list[float]) -> float:
    """Shannon entropy in bits of the listed probabilities.

    Probabilities must be in (0, 1] and sum to at most one (within the
    rounding tolerance); mass not listed is ignored.
    """
    total = 0.0
    acc = 0.0
    for p in distribution:
        if p <= 0:
            raise ValidationError(f"nonpositive probability {p}")
        if p > 1:
            raise ValidationError(f"probability above one: {p}")
        total += p
        acc -= p * math.log2(p)
    if total > 1 + _SUM_TOLERANCE:
        raise ValidationError(f"probabilities sum to {total}, above one")
    return acc


@dataclass(frozen=True)
class TokenRecord:
    token: str
    top_k: tuple[tuple[str, float], ...]
    entropy: float | None = None

    def __post_init__(self):
        probs = [p for _, p in self.top_k]
        if any(b > a for a, b in zip(probs, probs[1:])):
            raise ValidationError(
                f"top-k probabilities not nonincreasing for token {self.token!r}"
            )
        computed = token_entropy(probs) if probs else 0.0
        if self.entropy is not None and abs(self.entropy - computed) > _ENTROPY_CHECK_TOLERANCE:
            raise ValidationError(
                f"declared entropy {self.entropy} disagrees with the distribution "
                f"({computed:.8f} bits) for token {self.token!r}"
            )

    @property
    def entropy_bits(self) -> float:
        return token_entropy([p for _, p in self.top_k]) if self.top_k else 0.0


@dataclass(frozen=True)
class BracketSegment:
    tokens: tuple[TokenRecord, ...]
    role: str | None
    text: str
    max_entropy: float
    mean_entropy: float


@dataclass(frozen=True)
class TraceSample:
    sample_id: str
    tokens: tuple[TokenRecord, ...]

    @property
    def text(self) -> str:
        return "".join(t.token for t in self.tokens)


def extract_bracket_segments(
    tokens: list[TokenRecord], cues: dict[str, str] | None = None
) -> tuple[list[BracketSegment], list[int]]:
    """Bracket segments of one trace plus positions of unmatched brackets.

    A segment holds the tokens lying strictly between a matched [ and ]
    pair (tokens straddling a bracket character are boundary tokens and
    excluded). The role comes from the nearest cue phrase before the
    opening bracket; segments with no cue carry role None.
    """
    cues = cues or load_narrative_cues()
    text = "".join(t.token for t in tokens)
    offsets = []
    cursor = 0
    for t in tokens:
        offsets.append((cursor, cursor + len(t.token)))
        cursor += len(t.token)

    segments: list[BracketSegment] = []
    unmatched: list[int] = []
    open_pos: int | None = None
    for pos, ch in enumerate(text):
        if ch == "[":
            if open_pos is not None:
                unmatched.append(open_pos)
            open_pos = pos
        elif ch == "]":
            if open_pos is None:
                unmatched.append(pos)
                continue
            inner = [
                t
                for t, (s, e) in zip(tokens, offsets)
                if s > open_pos and e <= pos and e > s
            ]
            window = text[:open_pos]
            role = _nearest_role(window, cues)
            entropies = [t.entropy_bits for t in inner]
            segments.append(
                BracketSegment(
                    tokens=tuple(inner),
                    role=role,
                    text=text[open_pos + 1 : pos],
                    max_entropy=max(entropies, default=0.0),
                    mean_entropy=(sum(entropies) / len(entropies)) if entropies else 0.0,
                )
            )
            open_pos = None
    if open_pos is not None:
        unmatched.append(open_pos)
    return segments, unmatched


def _nearest_role(window: str, cues: dict[str, str]) -> str | None:
    best_role = None
    best_end = -1
    for cue, role in cues.items():
        for m in cue_pattern(cue).finditer(window):
            if m.end() > best_end:
                best_end = m.end()
                best_role = role
    return best_role


@dataclass(frozen=True)
class EntropyStats:
    mean_entropy: float
    entropy_std: float
    spike_rate: float
    sample_spike_ratio: float
    spike_threshold: float
    n_tokens: int
    n_brackets: int
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "mean_entropy_bits": self.mean_entropy,
            "entropy_std": self.entropy_std,
            "spike_rate": self.spike_rate,
            "sample_spike_ratio": self.sample_spike_ratio,
            "spike_threshold_bits": self.spike_threshold,
            "tokens": self.n_tokens,
            "brackets": self.n_brackets,
            "samples": self.n_samples,
        }


def _population_std(values: list[float]) -> float:
    if not values:
        return 0.0
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def compute_stats(
    samples: list[TraceSample],
    tau: float = 1.0,
    cues: dict[str, str] | None = None,
    std_over: str = "tokens",
) -> dict[str, EntropyStats | None]:
    """Pooled statistics per role group over all samples.

    A group with zero brackets reports None (absent), never zeros. The
    sample spike ratio counts each sample once, against all samples.
    """
    if tau <= 0:
        raise ValidationError("spike threshold must be positive")
    if std_over not in ("tokens", "brackets"):
        raise ValidationError(f"std_over must be tokens or brackets, not {std_over!r}")
    cues = cues or load_narrative_cues()
    groups = {"quantity": QUANTITY_GROUP, "relation": RELATION_GROUP}
    token_entropies: dict[str, list[float]] = {g: [] for g in groups}
    bracket_means: dict[str, list[float]] = {g: [] for g in groups}
    bracket_count: dict[str, int] = {g: 0 for g in groups}
    spiking_brackets: dict[str, int] = {g: 0 for g in groups}
    spiking_samples: dict[str, set[str]] = {g: set() for g in groups}

    for sample in samples:
        segments, _ = extract_bracket_segments(list(sample.tokens), cues)
        for seg in segments:
            group = next((g for g, roles in groups.items() if seg.role in roles), None)
            if group is None:
                continue
            entropies = [t.entropy_bits for t in seg.tokens]
            token_entropies[group].extend(entropies)
            bracket_means[group].append(seg.mean_entropy)
            bracket_count[group] += 1
            if any(e > tau for e in entropies):
                spiking_brackets[group] += 1
                spiking_samples[group].add(sample.sample_id)

    out: dict[str, EntropyStats | None] = {}
    n_samples = len(samples)
    for group in groups:
        n_brackets = bracket_count[group]
        if n_brackets == 0:
            out[group] = None
            continue
        pooled = token_entropies[group]
        mean = sum(pooled) / len(pooled) if pooled else 0.0
        std_values = pooled if std_over == "tokens" else bracket_means[group]
        out[group] = EntropyStats(
            mean_entropy=mean,
            entropy_std=_population_std(std_values),
            spike_rate=spiking_brackets[group] / n_brackets,
            sample_spike_ratio=(len(spiking_samples[group]) / n_samples) if n_samples else 0.0,
            spike_threshold=tau,
            n_tokens=len(pooled),
            n_brackets=n_brackets,
            n_samples=n_samples,
        )
    return out
