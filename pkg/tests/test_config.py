"""Test reading the engine configuration."""
import logging

import pytest

from optinsight.config import (
    EngineConfig,
    EvaluationConfig,
    ProviderConfig,
    config_from_dict,
    load_config,
)
from optinsight.llm.providers import Decoding

CONFIG = """
provider:
  kind: cassette
  cassette: run/cassette.json
  overrides:
    self_explore: 0.9
execution:
  runner_command: [python3, -I]
  tolerance_rel: 0.001
retrieval:
  use_taxonomy: false
solve:
  max_repair_rounds: 1
learning:
  batch_size: 4
evaluation:
  complexity_weight: 0.01
"""


def test_load_config(tmp_path):
    """Test that every section is read."""
    path = tmp_path / "config.yaml"
    path.write_text(CONFIG, encoding="utf-8")
    config = load_config(path)
    assert config.provider.kind == "Cassette"
    assert config.provider.cassette == "run/cassette.json"
    assert config.provider.decoding_overrides() == {
        "self_explore": Decoding(temperature=0.9, max_tokens=2048)
    }
    assert config.execution.runner_command == ("python3", "-I")
    assert config.learning.batch_size == 4
    assert config.learning.max_iterations == 5
    assert config.evaluation.complexity_weight == pytest.approx(0.01)
    solve = config.solve_config()
    assert solve.max_repair_rounds == 1
    assert solve.tolerance.rel == pytest.approx(0.001)
    assert not solve.retrieval.use_taxonomy


def test_defaults(tmp_path, caplog):
    """Test that a missing or empty file gives the defaults."""
    assert load_config(None) == EngineConfig()
    with caplog.at_level(logging.WARNING):
        assert load_config(tmp_path / "missing.yaml") == EngineConfig()
    assert "not found" in caplog.text
    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    assert load_config(empty) == EngineConfig()
    assert config_from_dict({}) == EngineConfig()


@pytest.mark.parametrize(
    "text, match",
    [
        ("learning:\n  batch_sise: 4\n", "learning.batch_sise"),
        ("colour: blue\n", "config.colour"),
        ("solve:\n  tolerance: 0.1\n", "solve.tolerance"),
        ("learning: [1, 2]\n", "must be a mapping"),
        ("- a\n- b\n", "does not hold a mapping"),
        ("learning: {batch_size: 4\n", "Invalid YAML"),
        ("learning:\n  workers: 0\n", "Invalid settings in 'config.learning'"),
    ],
)
def test_invalid_config(tmp_path, text, match):
    path = tmp_path / "config.yaml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ValueError, match=match):
        load_config(path)


def test_provider_kind():
    assert ProviderConfig(kind="LIVE").kind == "Live"
    with pytest.raises(ValueError):
        ProviderConfig(kind="oracle")
    with pytest.raises(ValueError):
        EvaluationConfig(train_fraction=1.0)


def test_fingerprint():
    """Test that the fingerprint follows the settings."""
    assert EngineConfig().fingerprint() == EngineConfig().fingerprint()
    changed = config_from_dict({"learning": {"seed": 9}})
    assert changed.fingerprint() != EngineConfig().fingerprint()
    assert "tolerance" not in EngineConfig().to_dict()["solve"]
