"""Uniform access to language-model completions."""
from __future__ import annotations

import json
import logging
import pathlib
import threading
import time
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from typing import Any

from optinsight.llm.prompts import PromptRegistry, prompt_hash
from optinsight.llm.providers import (
    CompletionRequest,
    Decoding,
    Provider,
    ProviderKind,
)

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class Exchange:
    """One prompt and its response."""

    template_id: str
    rendered_prompt_hash: str
    response_text: str
    provider: ProviderKind
    latency_ms: float
    lane: int = 0
    retries: int = 0


@dataclass
class Transcript:
    """An append-only log of exchanges and engine events."""

    exchanges: list[Exchange] = field(default_factory=list)
    prompts: dict[str, str] = field(default_factory=dict)
    events: list[dict[str, Any]] = field(default_factory=list)
    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    def record(self, exchange: Exchange, prompt: str):
        with self._lock:
            self.exchanges.append(exchange)
            self.prompts.setdefault(exchange.rendered_prompt_hash, prompt)

    def event(self, kind: str, **data: Any):
        """Append a machine-readable engine event."""
        with self._lock:
            self.events.append({"event": kind, **data})

    def events_of(self, kind: str) -> list[dict[str, Any]]:
        return [i for i in self.events if i["event"] == kind]

    def exchanges_for(self, template_id: str) -> list[Exchange]:
        return [i for i in self.exchanges if i.template_id == template_id]

    def prompts_for(self, template_id: str) -> list[str]:
        """The rendered prompts of a template, in call order."""
        return [
            self.prompts[i.rendered_prompt_hash]
            for i in self.exchanges_for(template_id)
        ]

    def count(self, *template_ids: str) -> int:
        return sum(len(self.exchanges_for(i)) for i in template_ids)

    def to_dict(self) -> dict[str, Any]:
        with self._lock:
            exchanges = [
                {**asdict(i), "provider": i.provider.value}
                for i in self.exchanges
            ]
            return {
                "exchanges": exchanges,
                "events": list(self.events),
            }

    def save(self, path: str | pathlib.Path):
        """Write the transcript as a JSON document."""
        pathlib.Path(path).write_text(
            json.dumps(self.to_dict(), indent=1, default=str),
            encoding="utf-8",
        )


class Gateway:
    """Render templates, call the provider and log the exchange."""

    def __init__(
        self,
        provider: Provider,
        registry: PromptRegistry | None = None,
        transcript: Transcript | None = None,
        decoding: Decoding | None = None,
        overrides: Mapping[str, Decoding] | None = None,
    ):
        self.provider = provider
        self.registry = registry if registry is not None else PromptRegistry()
        if transcript is None:
            transcript = Transcript()
        self.transcript = transcript
        self.decoding = decoding if decoding is not None else Decoding()
        self.overrides = dict(overrides or {})

    def decoding_for(self, template_id: str) -> Decoding:
        return self.overrides.get(template_id, self.decoding)

    def complete(
        self,
        template_id: str,
        variables: Mapping[str, Any],
        decoding: Decoding | None = None,
        lane: int = 0,
    ) -> str:
        """Render a template and return the response text.

        Raises:
            MissingVar: If a required variable is missing.
            CassetteMiss: If the prompt was not recorded (replay).
            ProviderError: If the provider failed after its retries.
        """
        prompt = self.registry.render(template_id, variables)
        request = CompletionRequest(
            template_id=template_id,
            prompt=prompt,
            prompt_hash=prompt_hash(prompt),
            decoding=decoding or self.decoding_for(template_id),
            lane=lane,
        )
        start = time.perf_counter()
        response = self.provider.complete(request)
        latency = (time.perf_counter() - start) * 1000.0
        self.transcript.record(
            Exchange(
                template_id=template_id,
                rendered_prompt_hash=request.prompt_hash,
                response_text=response.text,
                provider=self.provider.kind,
                latency_ms=latency,
                lane=lane,
                retries=response.retries,
            ),
            prompt,
        )
        return response.text
