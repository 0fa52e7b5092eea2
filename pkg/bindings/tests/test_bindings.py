from __future__ import annotations

import concurrent.futures

import pytest

import measqc
import measqc_bindings as bindings
from measqc.errors import ConfigError, ValidationError


def test_version_matches_core():
    assert bindings.__version__ == measqc.__version__


def test_bound_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        bindings.BoundConfig("quantity", {"mystery_knob": 1})
    with pytest.raises(ConfigError):
        bindings.BoundConfig("nonsense-phase", {})
    config = bindings.BoundConfig("quantity", {"fabrication_penalty": 0.25})
    assert config.resolved()["fabrication_penalty"] == 0.25


def test_phase_mismatch_rejected():
    config = bindings.BoundConfig("relation", {})
    with pytest.raises(ConfigError):
        bindings.reward_quantity("", [], config)


def test_empty_generation_single_call():
    record = bindings.reward_quantity("", ["5 mg"])
    assert record["breakdown"]["format"] == 0.0
    assert record["breakdown"]["misclassification"] == -0.5


def test_validate_span_empty_candidate():
    record = bindings.validate_span("")
    assert record["parsed"] is None
    assert record["out_of_scope"] == []


def test_core_errors_surface_unchanged():
    with pytest.raises(ValidationError) as err:
        bindings.reward_quantity_batch(
            [{"doc_id": "ghost", "generation": ""}],
            "docId\tannotSet\tannotType\tstartOffset\tendOffset\tannotId\ttext\tother\n",
        )
    assert "ghost" in str(err.value)


def test_repeated_calls_identical_and_thread_safe():
    candidates = ["up to 798 °C", "Fig. 4", "100 mg"] * 8
    sequential = bindings.validate_span_batch(candidates)
    with concurrent.futures.ThreadPoolExecutor(max_workers=6) as pool:
        threaded = list(pool.map(bindings.validate_span, candidates))
    assert threaded == sequential
    assert bindings.validate_span_batch(candidates) == sequential
