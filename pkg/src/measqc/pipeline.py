"""Construction and filtering of the two reasoning-trace training corpora.

Two flows against a pluggable text-generation service:

* augmentation corpus — anchor each unlabeled text with parser-extracted
  quantities, prompt the model to verify them and emit a six-section trace,
  keep trajectories that pass the format gate;
* traceback corpus — prompt the model with the gold answer to reconstruct a
  reasoning trace, keep trajectories whose conclusion equals the gold
  answer exactly (whitespace-normalized, order-insensitive multiset of
  surface/unit/modifier-set triples).

Every input text is accounted for exactly once: accepted, rejected,
skipped (no anchors), or failed (client error). With the deterministic
mock client and a fixed seed the output is byte-identical across runs.
"""

from __future__ import annotations

import hashlib
import os
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import requests

from .errors import ClientError, TemplateError
from .quantities import QuantityParser, default_parser
from .textutil import normalize_ws
from .traces import (
    ConclusionRow,
    extract_conclusion_body,
    parse_conclusion_rows,
    render_trace,
)

ANCHOR_MARKER = "The reference answer from quantulum:"
GOLD_MARKER = "The gold answers:"

_FORMAT_RULES = (
    "Work through six sections in order, each inside its own tags:\n"
    "<ARABIC-QUANTITY>...</ARABIC-QUANTITY> <NUMERIC-QUANTITY>...</NUMERIC-QUANTITY>\n"
    "<TIME-QUANTITY>...</TIME-QUANTITY> <CHANGE-QUANTITY>...</CHANGE-QUANTITY>\n"
    "<FORMULA-QUANTITY>...</FORMULA-QUANTITY> <CONCLUSION>...</CONCLUSION>\n"
    "In CONCLUSION, emit one tab-separated row per quantity: surface, unit,\n"
    "comma-joined modifiers. Copy every surface verbatim from the text."
)

AUG_TEMPLATE_BODY = (
    "You extract every quantity stated in a scientific text.\n"
    f"{_FORMAT_RULES}\n"
    "The reference answers below come from an automatic parser and may be\n"
    "wrong; verify each against the text and drop false positives.\n\n"
    "Text:\n{TEXT}\n\n"
    f"{ANCHOR_MARKER}\n{{ANCHORS}}\n"
)

TRACE_TEMPLATE_BODY = (
    "You extract every quantity stated in a scientific text.\n"
    f"{_FORMAT_RULES}\n"
    "Reconstruct the reasoning that leads exactly to the gold answer; the\n"
    "CONCLUSION must match it precisely.\n\n"
    "Text:\n{TEXT}\n\n"
    f"{GOLD_MARKER}\n{{GOLD}}\n"
)

_PLACEHOLDER_RE = re.compile(r"\{([A-Z_]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str

    def render(self, **bindings: str) -> str:
        wanted = set(_PLACEHOLDER_RE.findall(self.body))
        unknown = set(bindings) - wanted
        if unknown:
            raise TemplateError(
                f"template {self.template_id} has no placeholder for {sorted(unknown)}"
            )
        missing = wanted - set(bindings)
        if missing:
            raise TemplateError(
                f"template {self.template_id} leaves {sorted(missing)} unbound"
            )
        empty = sorted(k for k, v in bindings.items() if not str(v).strip())
        if empty:
            raise TemplateError(
                f"template {self.template_id} got empty binding(s) for {empty}"
            )
        out = self.body
        for key, value in bindings.items():
            out = out.replace("{%s}" % key, value)
        return out


AUG_TEMPLATE = PromptTemplate("P_aug", AUG_TEMPLATE_BODY)
TRACE_TEMPLATE = PromptTemplate("P_trace", TRACE_TEMPLATE_BODY)


def rows_block(rows: list[ConclusionRow]) -> str:
    """Anchors/gold serialized one per line: surface, unit, modifiers."""
    return "\n".join(r.as_line() for r in rows)


class MockClient:
    """Deterministic stand-in for a generation service.

    A pure function of (prompt, seed): it reads the anchors/gold block out
    of the prompt and echoes a canonical six-section trace concluding with
    exactly those rows. Section bodies vary deterministically with the
    prompt digest and seed.
    """

    def send(self, prompt: str, *, temperature: float = 0.0,
             max_tokens: int = 1024, seed: int = 0) -> str:
        rows = self._rows_from_prompt(prompt)
        digest = hashlib.sha256(f"{seed}:{prompt}".encode("utf-8")).hexdigest()
        bodies = {}
        for i, name in enumerate(
            ("ARABIC-QUANTITY", "NUMERIC-QUANTITY", "TIME-QUANTITY",
             "CHANGE-QUANTITY", "FORMULA-QUANTITY")
        ):
            bodies[name] = f"Scanning pass {digest[i * 4 : i * 4 + 4]}: nothing further."
        return render_trace(rows, bodies)

    @staticmethod
    def _rows_from_prompt(prompt: str) -> list[ConclusionRow]:
        for marker in (ANCHOR_MARKER, GOLD_MARKER):
            pos = prompt.find(marker)
            if pos < 0:
                continue
            block = prompt[pos + len(marker):]
            lines = []
            for line in block.splitlines():
                if lines and not line.strip():
                    break
                if line.strip():
                    lines.append(line)
            rows, _ = parse_conclusion_rows("\n".join(lines))
            return rows
        return []


class HttpClient:
    """JSON-over-HTTP chat-completion-style adapter.

    Endpoint and credentials come from GEN_ENDPOINT / GEN_API_KEY; the
    request carries one user message and decoding parameters, the response
    is expected as {"choices": [{"message": {"content": ...}}]}.
    """

    def __init__(self, endpoint: str | None = None, api_key: str | None = None,
                 model: str | None = None, timeout: float = 120.0):
        self.endpoint = endpoint or os.environ.get("GEN_ENDPOINT")
        self.api_key = api_key or os.environ.get("GEN_API_KEY")
        self.model = model or os.environ.get("GEN_MODEL", "default")
        self.timeout = timeout
        if not self.endpoint:
            raise ClientError("GEN_ENDPOINT is not set")

    def send(self, prompt: str, *, temperature: float = 0.0,
             max_tokens: int = 1024, seed: int = 0) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": max_tokens,
            "seed": seed,
        }
        try:
            response = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
            response.raise_for_status()
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise ClientError(f"generation request failed: {exc}") from exc


@dataclass(frozen=True)
class AugExample:
    doc_id: str
    text: str
    anchors: tuple[ConclusionRow, ...]
    trajectory: str | None
    accepted: bool
    reason: str | None = None


@dataclass(frozen=True)
class TraceExample:
    doc_id: str
    text: str
    gold: tuple[ConclusionRow, ...]
    trajectory: str | None
    accepted: bool
    reason: str | None = None


@dataclass
class PipelineStats:
    accepted: int = 0
    rejected: int = 0
    skipped: int = 0
    failed: int = 0

    @property
    def total(self) -> int:
        return self.accepted + self.rejected + self.skipped + self.failed

    def count(self, example) -> None:
        if example is None:
            self.skipped += 1
        elif example.trajectory is None:
            self.failed += 1
        elif example.accepted:
            self.accepted += 1
        else:
            self.rejected += 1


def _row_key(row: ConclusionRow) -> tuple[str, str, frozenset]:
    return (
        normalize_ws(row.surface),
        normalize_ws(row.unit or ""),
        frozenset(normalize_ws(m) for m in row.modifiers),
    )


def _describe_key(key: tuple[str, str, frozenset]) -> str:
    surface, unit, mods = key
    parts = [f"surface {surface!r}"]
    if unit:
        parts.append(f"unit {unit!r}")
    if mods:
        parts.append("modifiers {%s}" % ", ".join(sorted(mods)))
    return ", ".join(parts)


def validate_trace(example: TraceExample) -> TraceExample:
    """Accept iff the trajectory's conclusion equals the gold answer exactly.

    Equality is over the multiset of whitespace-normalized
    (surface, unit, modifier-set) triples; the rejection reason names the
    first differing element.
    """
    if example.trajectory is None:
        return replace(example, accepted=False, reason="no trajectory")
    body = extract_conclusion_body(example.trajectory)
    if body is None:
        return replace(example, accepted=False, reason="no conclusion")
    rows, errors = parse_conclusion_rows(body)
    if errors:
        return replace(example, accepted=False, reason=f"malformed conclusion: {errors[0]}")
    got = Counter(_row_key(r) for r in rows)
    want = Counter(_row_key(r) for r in example.gold)
    if got == want:
        return replace(example, accepted=True, reason=None)
    for row in example.gold:
        key = _row_key(row)
        if got[key] < want[key]:
            alt = next(
                (k for k in got if k[0] == key[0] and got[k] > want.get(k, 0)), None
            )
            if alt is not None:
                return replace(
                    example, accepted=False,
                    reason=f"mismatch for surface {key[0]!r}: expected {_describe_key(key)}, "
                           f"got {_describe_key(alt)}",
                )
            return replace(
                example, accepted=False, reason=f"missing {_describe_key(key)}"
            )
    extra = next(k for k in got if got[k] > want.get(k, 0))
    return replace(example, accepted=False, reason=f"unexpected {_describe_key(extra)}")


def render_prompt(template: PromptTemplate, **bindings: str) -> str:
    return template.render(**bindings)


def _run_batch(items, worker, max_in_flight: int):
    if max_in_flight <= 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(worker, items))


def build_aug_candidates(
    texts: list[tuple[str, str]],
    client,
    template: PromptTemplate = AUG_TEMPLATE,
    seed: int = 0,
    max_in_flight: int = 4,
    parser: QuantityParser | None = None,
) -> tuple[list[AugExample], PipelineStats]:
    """One anchored candidate per text with at least one parser anchor.

    Texts with no anchors are skipped and counted; client failures mark the
    candidate failed and the batch continues.
    """
    from .reward_quantity import reward_format

    parser = parser or default_parser()

    def worker(item: tuple[str, str]) -> AugExample | None:
        doc_id, text = item
        anchors = tuple(
            ConclusionRow(q.surface, q.unit_surface, q.modifiers)
            for q in parser.extract(text)
        )
        if not anchors:
            return None
        prompt = template.render(TEXT=text, ANCHORS=rows_block(list(anchors)))
        try:
            trajectory = client.send(prompt, seed=seed)
        except ClientError as exc:
            return AugExample(doc_id, text, anchors, None, False, str(exc))
        if reward_format(trajectory) == 1.0:
            return AugExample(doc_id, text, anchors, trajectory, True)
        return AugExample(doc_id, text, anchors, trajectory, False, "format check failed")

    stats = PipelineStats()
    results = []
    for doc_id_text, example in zip(texts, _run_batch(texts, worker, max_in_flight)):
        stats.count(example)
        if example is None:
            example = AugExample(doc_id_text[0], doc_id_text[1], (), None, False, "no anchors")
        results.append(example)
    return results, stats


def build_trace_candidates(
    items: list[tuple[str, str, list[ConclusionRow]]],
    client,
    template: PromptTemplate = TRACE_TEMPLATE,
    seed: int = 0,
    max_in_flight: int = 4,
) -> tuple[list[TraceExample], PipelineStats]:
    """Gold-guided trajectories filtered by the exact-conclusion test."""

    def worker(item: tuple[str, str, list[ConclusionRow]]) -> TraceExample:
        doc_id, text, gold = item
        prompt = template.render(TEXT=text, GOLD=rows_block(list(gold)))
        try:
            trajectory = client.send(prompt, seed=seed)
        except ClientError as exc:
            return TraceExample(doc_id, text, tuple(gold), None, False, str(exc))
        return validate_trace(
            TraceExample(doc_id, text, tuple(gold), trajectory, False)
        )

    stats = PipelineStats()
    results = _run_batch(items, worker, max_in_flight)
    for example in results:
        stats.count(example)
    return results, stats


def example_record(example) -> dict:
    """The JSONL record shape shared by both corpus builders."""
    return {
        "doc_id": example.doc_id,
        "text": example.text,
        "trajectory": example.trajectory,
        "accepted": example.accepted,
        "reason": example.reason,
    }
