"""Test the gateway and the providers."""
from types import SimpleNamespace

import pytest

from optinsight.exceptions import MissingVar, ProviderError
from optinsight.llm.gateway import Gateway, Transcript
from optinsight.llm.prompts import prompt_hash
from optinsight.llm.providers import (
    CompletionRequest,
    Decoding,
    LiveProvider,
    ProviderKind,
)
from optinsight.llm.scripted import ScriptedProvider


def test_complete_records_exchange():
    """Test that every completion is logged in the transcript."""
    provider = ScriptedProvider({"classify_problem": '{"type": "LP"}'})
    gateway = Gateway(provider)
    text = gateway.complete(
        "classify_problem", {"task_description": "Blend oils."}, lane=2
    )
    assert text == '{"type": "LP"}'
    exchange = gateway.transcript.exchanges[0]
    assert exchange.template_id == "classify_problem"
    assert exchange.lane == 2
    assert exchange.provider == ProviderKind.SCRIPTED
    request = provider.calls("classify_problem")[0]
    assert exchange.rendered_prompt_hash == prompt_hash(request.prompt)
    assert "Blend oils." in gateway.transcript.prompts_for(
        "classify_problem"
    )[0]
    assert gateway.transcript.count("classify_problem", "formulate") == 1


def test_decoding_overrides():
    """Test the default, per-template and per-call decoding."""
    provider = ScriptedProvider(default="ok")
    gateway = Gateway(
        provider,
        decoding=Decoding(temperature=0.0),
        overrides={"self_explore": Decoding(temperature=0.7)},
    )
    assert gateway.decoding_for("formulate").temperature == 0.0
    assert gateway.decoding_for("self_explore").temperature == 0.7
    gateway.complete(
        "classify_problem",
        {"task_description": "x"},
        decoding=Decoding(temperature=0.3, seed=5),
    )
    assert provider.requests[0].decoding.seed == 5


def test_missing_var_is_not_sent():
    """Test that a failed render never reaches the provider."""
    provider = ScriptedProvider(default="ok")
    with pytest.raises(MissingVar):
        Gateway(provider).complete("classify_problem", {})
    assert not provider.requests


def test_scripted_provider():
    """Test fixed, computed and missing responders."""
    provider = ScriptedProvider().on("a", "fixed")
    provider.on("b", lambda request: request.prompt.upper())
    assert provider(CompletionRequest("a", "p", "h")).text == "fixed"
    assert provider(CompletionRequest("b", "up", "h")).text == "UP"
    with pytest.raises(ProviderError):
        provider(CompletionRequest("c", "p", "h"))
    assert len(provider.calls("a")) == 1


def test_transcript_events(tmp_path):
    """Test engine events and the saved transcript."""
    transcript = Transcript()
    transcript.event("stop", reason="MaxIterations")
    transcript.event("iteration", index=1)
    assert transcript.events_of("stop") == [
        {"event": "stop", "reason": "MaxIterations"}
    ]
    path = tmp_path / "transcript.json"
    transcript.save(path)
    assert '"MaxIterations"' in path.read_text(encoding="utf-8")


class FlakyCompletions:
    """Fail a number of times, then answer."""

    def __init__(self, failures: int):
        self.failures = failures
        self.calls = []

    def create(self, **kwargs):
        self.calls.append(kwargs)
        if len(self.calls) <= self.failures:
            raise ConnectionError("connection reset")
        message = SimpleNamespace(content="42")
        return SimpleNamespace(choices=[SimpleNamespace(message=message)])


def flaky_client(failures: int):
    completions = FlakyCompletions(failures)
    client = SimpleNamespace(chat=SimpleNamespace(completions=completions))
    return client, completions


def test_live_provider_retries():
    """Test that transient failures are retried with backoff."""
    client, completions = flaky_client(failures=2)
    sleeps = []
    provider = LiveProvider(
        "gpt-4o",
        max_attempts=3,
        backoff_s=0.5,
        client=client,
        sleep=sleeps.append,
    )
    request = CompletionRequest(
        "formulate", "Solve.", "h", Decoding(temperature=0.2, seed=1)
    )
    response = provider.complete(request)
    assert response.text == "42"
    assert response.retries == 2
    assert sleeps == [0.5, 1.0]
    assert completions.calls[0]["model"] == "gpt-4o"
    assert completions.calls[0]["temperature"] == 0.2
    assert completions.calls[0]["seed"] == 1


def test_live_provider_gives_up(caplog):
    """Test that a ProviderError follows the last failed attempt."""
    client, completions = flaky_client(failures=5)
    provider = LiveProvider(
        "gpt-4o", max_attempts=2, client=client, sleep=lambda _: None
    )
    with pytest.raises(ProviderError, match="after 2 attempts"):
        provider.complete(CompletionRequest("formulate", "Solve.", "h"))
    assert len(completions.calls) == 2
    assert "attempt 2/2" in caplog.text


def test_live_provider_needs_key(monkeypatch):
    """Test that a missing API key is reported before any call."""
    monkeypatch.delenv("OPTINSIGHT_TEST_KEY", raising=False)
    provider = LiveProvider("gpt-4o", api_key_env="OPTINSIGHT_TEST_KEY")
    with pytest.raises(ProviderError, match="OPTINSIGHT_TEST_KEY"):
        provider.complete(CompletionRequest("formulate", "Solve.", "h"))
    with pytest.raises(ValueError):
        LiveProvider("gpt-4o", max_attempts=0)
