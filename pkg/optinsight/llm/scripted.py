"""A provider that answers from scripted rules.

Each template id maps to a responder: a fixed string or a function of
the completion request. This drives offline dry runs and tests, and its
exchanges can be recorded to a cassette like any other provider.
"""
from __future__ import annotations

import threading
from collections.abc import Callable, Mapping

from optinsight.exceptions import ProviderError
from optinsight.llm.providers import (
    CompletionRequest,
    CompletionResponse,
    Provider,
    ProviderKind,
)

Responder = Callable[[CompletionRequest], str]


class ScriptedProvider(Provider):
    """Answer each template with its responder."""

    kind = ProviderKind.SCRIPTED

    def __init__(
        self,
        responders: Mapping[str, Responder | str] | None = None,
        default: Responder | str | None = None,
    ):
        self.responders: dict[str, Responder | str] = dict(responders or {})
        self.default = default
        self.requests: list[CompletionRequest] = []
        self._lock = threading.Lock()

    def on(self, template_id: str, responder: Responder | str):
        """Set the responder of a template, returning the provider."""
        self.responders[template_id] = responder
        return self

    def calls(self, template_id: str) -> list[CompletionRequest]:
        with self._lock:
            return [i for i in self.requests if i.template_id == template_id]

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._lock:
            self.requests.append(request)
        responder = self.responders.get(request.template_id, self.default)
        if responder is None:
            raise ProviderError(
                f"No scripted response for '{request.template_id}'"
            )
        if isinstance(responder, str):
            return CompletionResponse(text=responder)
        return CompletionResponse(text=responder(request))
