"""Providers answer rendered prompts.

The live provider talks to an OpenAI-compatible chat completions
endpoint. The cassette provider (see `optinsight.llm.cassette`) and the
scripted provider (see `optinsight.llm.scripted`) answer without any
network access.
"""
from __future__ import annotations

import logging
import os
import time
from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from typing import Any

from optinsight.exceptions import ProviderError

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


class ProviderKind(str, Enum):
    """Where responses come from."""

    LIVE = "Live"
    CASSETTE = "Cassette"
    SCRIPTED = "Scripted"


@dataclass(frozen=True)
class Decoding:
    """Decoding parameters for one completion."""

    temperature: float = 0.0
    max_tokens: int = 2048
    seed: int | None = None


@dataclass(frozen=True)
class CompletionRequest:
    """A rendered prompt on its way to a provider."""

    template_id: str
    prompt: str
    prompt_hash: str
    decoding: Decoding = Decoding()
    lane: int = 0  # Trial lane, keeps independent trials apart.


@dataclass(frozen=True)
class CompletionResponse:
    """The provider's answer."""

    text: str
    retries: int = 0


class Provider(ABC):
    """Base class for providers."""

    kind: ProviderKind

    @abstractmethod
    def complete(self, request: CompletionRequest) -> CompletionResponse:
        """Answer a rendered prompt."""

    def __call__(self, request: CompletionRequest) -> CompletionResponse:
        return self.complete(request)


class LiveProvider(Provider):
    """An OpenAI-compatible chat completions endpoint.

    Transient failures are retried with exponential backoff; after
    ``max_attempts`` failed calls a `ProviderError` is raised.
    """

    kind = ProviderKind.LIVE

    def __init__(
        self,
        model: str,
        endpoint: str | None = None,
        api_key_env: str = "OPENAI_API_KEY",
        max_attempts: int = 3,
        backoff_s: float = 1.0,
        client: Any = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        self.model = model
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.sleep = sleep
        self._client = client

    @property
    def client(self) -> Any:
        if self._client is None:
            import openai

            api_key = os.environ.get(self.api_key_env)
            if not api_key:
                raise ProviderError(
                    f"Environment variable {self.api_key_env} is not set"
                )
            self._client = openai.OpenAI(
                base_url=self.endpoint, api_key=api_key
            )
        return self._client

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        """Issue one wire call, retrying transient failures."""
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                completion = self.client.chat.completions.create(
                    model=self.model,
                    messages=[{"role": "user", "content": request.prompt}],
                    temperature=request.decoding.temperature,
                    max_tokens=request.decoding.max_tokens,
                    seed=request.decoding.seed,
                )
                text = completion.choices[0].message.content or ""
                return CompletionResponse(text=text, retries=attempt)
            except ProviderError:
                raise
            except Exception as error:  # Wire errors vary by client.
                last_error = error
                LOGGER.warning(
                    "Completion for '%s' failed (attempt %d/%d): %s",
                    request.template_id,
                    attempt + 1,
                    self.max_attempts,
                    error,
                )
                if attempt + 1 < self.max_attempts:
                    self.sleep(self.backoff_s * 2**attempt)
        raise ProviderError(
            f"Completion for '{request.template_id}' failed after "
            f"{self.max_attempts} attempts: {last_error}"
        )
