"""For importing the language-model gateway."""
from .cassette import (
    Cassette,
    CassetteProvider,
    CassetteRecord,
    open_cassette,
    record_cassette,
)
from .gateway import Exchange, Gateway, Transcript
from .prompts import PromptRegistry, PromptTemplate, prompt_hash
from .providers import (
    CompletionRequest,
    CompletionResponse,
    Decoding,
    LiveProvider,
    Provider,
    ProviderKind,
)
from .scripted import ScriptedProvider

__all__ = [
    "Cassette",
    "CassetteProvider",
    "CassetteRecord",
    "CompletionRequest",
    "CompletionResponse",
    "Decoding",
    "Exchange",
    "Gateway",
    "LiveProvider",
    "PromptRegistry",
    "PromptTemplate",
    "Provider",
    "ProviderKind",
    "ScriptedProvider",
    "Transcript",
    "open_cassette",
    "prompt_hash",
    "record_cassette",
]
