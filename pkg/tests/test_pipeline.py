from __future__ import annotations

import random

import pytest

from measqc.errors import ClientError, TemplateError
from measqc.pipeline import (
    AUG_TEMPLATE,
    GOLD_MARKER,
    MockClient,
    PromptTemplate,
    TRACE_TEMPLATE,
    TraceExample,
    build_aug_candidates,
    build_trace_candidates,
    render_prompt,
    rows_block,
    validate_trace,
)
from measqc.traces import ConclusionRow

from .genutil import random_gold_rows

GOLD = [ConclusionRow("up to 798 °C", "°C", ("IsRange",))]


class FailingClient:
    def __init__(self, fail_ids: set[str]):
        self.fail_ids = fail_ids

    def send(self, prompt: str, **kwargs) -> str:
        for marker in self.fail_ids:
            if marker in prompt:
                raise ClientError("synthetic outage")
        return MockClient().send(prompt, **kwargs)


class MalformedClient:
    def send(self, prompt: str, **kwargs) -> str:
        return "free-form chatter with no tags at all"


def test_render_prompt_trace_contains_gold_block():
    prompt = render_prompt(TRACE_TEMPLATE, TEXT="some text", GOLD=rows_block(GOLD))
    assert "some text" in prompt
    assert GOLD_MARKER in prompt
    assert "up to 798 °C\t°C\tIsRange" in prompt


def test_render_prompt_aug_contains_reference_marker():
    prompt = render_prompt(AUG_TEMPLATE, TEXT="t", ANCHORS=rows_block(GOLD))
    assert "The reference answer from quantulum:" in prompt


def test_unbound_placeholder_is_an_error():
    with pytest.raises(TemplateError):
        render_prompt(AUG_TEMPLATE, TEXT="t")
    with pytest.raises(TemplateError):
        render_prompt(PromptTemplate("x", "{TEXT}"), TEXT="t", GOLD="g")


def test_empty_anchors_are_an_error():
    with pytest.raises(TemplateError):
        render_prompt(AUG_TEMPLATE, TEXT="t", ANCHORS="")


def test_mock_client_is_deterministic():
    prompt = render_prompt(AUG_TEMPLATE, TEXT="heated to 100 mg", ANCHORS=rows_block(GOLD))
    a = MockClient().send(prompt, seed=5)
    b = MockClient().send(prompt, seed=5)
    c = MockClient().send(prompt, seed=6)
    assert a == b
    assert a != c


def test_build_aug_accepts_mock_fixture():
    texts = [("d1", "heated to 100 mg")]
    examples, stats = build_aug_candidates(texts, MockClient())
    assert stats.accepted == 1 and stats.total == 1
    assert examples[0].accepted
    assert len(examples[0].anchors) == 1
    assert examples[0].anchors[0].surface == "100 mg"


def test_text_without_quantities_is_skipped():
    examples, stats = build_aug_candidates([("d1", "no numerals at all")], MockClient())
    assert stats.skipped == 1
    assert examples[0].reason == "no anchors"


def test_conservation_over_mixed_batch():
    rng = random.Random(1)
    texts = []
    for i in range(50):
        roll = rng.random()
        if roll < 0.25:
            texts.append((f"d{i}", "plain words only"))
        elif roll < 0.4:
            texts.append((f"FAIL-{i}", f"broken call {rng.randint(2, 99)} mg"))
        else:
            texts.append((f"d{i}", f"dose of {rng.randint(2, 99)} mg"))
    client = FailingClient({"broken call"})
    examples, stats = build_aug_candidates(texts, client, max_in_flight=3)
    assert stats.total == 50
    assert stats.accepted + stats.rejected + stats.skipped + stats.failed == 50
    assert stats.failed == sum(1 for d, _ in texts if d.startswith("FAIL"))
    assert len(examples) == 50
    assert [e.doc_id for e in examples] == [d for d, _ in texts]


def test_malformed_trajectories_are_rejected_not_dropped():
    examples, stats = build_aug_candidates([("d", "5 mg dose")], MalformedClient())
    assert stats.rejected == 1
    assert examples[0].reason == "format check failed"


def test_validate_trace_accepts_exact_conclusion():
    trajectory = MockClient().send(
        render_prompt(TRACE_TEMPLATE, TEXT="t", GOLD=rows_block(GOLD))
    )
    example = TraceExample("d", "t", tuple(GOLD), trajectory, False)
    assert validate_trace(example).accepted


def test_validate_trace_rejects_surface_perturbation():
    perturbed = [ConclusionRow("798 °C", "°C", ("IsRange",))]
    trajectory = MockClient().send(
        render_prompt(TRACE_TEMPLATE, TEXT="t", GOLD=rows_block(perturbed))
    )
    checked = validate_trace(TraceExample("d", "t", tuple(GOLD), trajectory, False))
    assert not checked.accepted
    assert "up to 798 °C" in checked.reason


def test_validate_trace_rejects_extra_row():
    rows = GOLD + [ConclusionRow("5 mg", "mg", ())]
    trajectory = MockClient().send(
        render_prompt(TRACE_TEMPLATE, TEXT="t", GOLD=rows_block(rows))
    )
    checked = validate_trace(TraceExample("d", "t", tuple(GOLD), trajectory, False))
    assert not checked.accepted
    assert "unexpected" in checked.reason


def test_validate_trace_no_conclusion():
    checked = validate_trace(TraceExample("d", "t", tuple(GOLD), "no tags", False))
    assert not checked.accepted
    assert checked.reason == "no conclusion"


def test_build_trace_filters(monkeypatch):
    items = [("d", "some text", list(GOLD))]
    examples, stats = build_trace_candidates(items, MockClient())
    assert stats.accepted == 1
    assert examples[0].accepted


def test_http_client_requires_endpoint(monkeypatch):
    from measqc.pipeline import HttpClient

    monkeypatch.delenv("GEN_ENDPOINT", raising=False)
    with pytest.raises(ClientError):
        HttpClient()


def test_http_client_parses_chat_response(monkeypatch):
    from measqc import pipeline

    captured = {}

    class FakeResponse:
        def raise_for_status(self):
            pass

        def json(self):
            return {"choices": [{"message": {"content": "generated text"}}]}

    def fake_post(url, json=None, headers=None, timeout=None):
        captured["url"] = url
        captured["payload"] = json
        captured["headers"] = headers
        return FakeResponse()

    monkeypatch.setattr(pipeline.requests, "post", fake_post)
    client = pipeline.HttpClient(endpoint="http://unit.test/v1", api_key="k")
    assert client.send("prompt here", seed=9) == "generated text"
    assert captured["url"] == "http://unit.test/v1"
    assert captured["payload"]["messages"][0]["content"] == "prompt here"
    assert captured["payload"]["seed"] == 9
    assert captured["headers"]["Authorization"] == "Bearer k"


def test_http_client_wraps_transport_errors(monkeypatch):
    from measqc import pipeline

    def exploding_post(*args, **kwargs):
        raise pipeline.requests.ConnectionError("boom")

    monkeypatch.setattr(pipeline.requests, "post", exploding_post)
    client = pipeline.HttpClient(endpoint="http://unit.test/v1")
    with pytest.raises(ClientError):
        client.send("prompt")


def test_reproducibility_byte_identical():
    rng = random.Random(2)
    texts = [(f"d{i}", f"dose of {rng.randint(2, 99)} mg") for i in range(20)]
    runs = []
    for _ in range(2):
        examples, _ = build_aug_candidates(texts, MockClient(), seed=42, max_in_flight=4)
        runs.append([(e.doc_id, e.trajectory, e.accepted, e.reason) for e in examples])
    assert runs[0] == runs[1]


def test_every_single_field_perturbation_flips_acceptance():
    from measqc.traces import render_trace

    rng = random.Random(20240811)
    for _ in range(50):
        gold = random_gold_rows(rng, n_min=1, n_max=4)
        trajectory = render_trace(list(gold))
        assert validate_trace(TraceExample("d", "t", tuple(gold), trajectory, False)).accepted
        idx = rng.randrange(len(gold))
        target = gold[idx]
        mutations = [
            ConclusionRow(target.surface + "x", target.unit, target.modifiers),
            ConclusionRow(target.surface, (target.unit or "") + "z", target.modifiers),
            ConclusionRow(target.surface, target.unit,
                          target.modifiers + ("IsList",) if "IsList" not in target.modifiers
                          else target.modifiers[:-1]),
        ]
        for mutant in mutations:
            rows = list(gold)
            rows[idx] = mutant
            checked = validate_trace(
                TraceExample("d", "t", tuple(gold), render_trace(rows), False)
            )
            assert not checked.accepted, mutant
        dropped = list(gold[:idx]) + list(gold[idx + 1:])
        assert not validate_trace(
            TraceExample("d", "t", tuple(gold), render_trace(dropped), False)
        ).accepted
