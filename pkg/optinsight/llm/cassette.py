"""Record and replay language-model exchanges.

A cassette is an ordered list of ``(template id, prompt hash, lane,
response)`` records followed by a checksum line. Replaying a cassette
is a pure lookup: the same key always gives the same response.
"""
from __future__ import annotations

import hashlib
import json
import logging
import pathlib
from dataclasses import dataclass

from optinsight.exceptions import CassetteMiss, CorruptCassette
from optinsight.llm.gateway import Transcript
from optinsight.llm.providers import (
    CompletionRequest,
    CompletionResponse,
    Provider,
    ProviderKind,
)

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

CASSETTE_FORMAT = "optinsight-cassette"
CASSETTE_VERSION = 1
CHECKSUM_PREFIX = "#sha256="


@dataclass(frozen=True)
class CassetteRecord:
    """One recorded exchange."""

    template_id: str
    prompt_hash: str
    lane: int
    response_text: str

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.template_id, self.prompt_hash, self.lane)


class Cassette:
    """An ordered collection of recorded exchanges."""

    def __init__(self, records: list[CassetteRecord] | None = None):
        self.records: list[CassetteRecord] = []
        self._index: dict[tuple[str, str, int], CassetteRecord] = {}
        for record in records or []:
            self.add(record)

    def add(self, record: CassetteRecord):
        """Add a record; the first record for a key wins."""
        if record.key not in self._index:
            self._index[record.key] = record
            self.records.append(record)

    def lookup(
        self, template_id: str, prompt_hash: str, lane: int = 0
    ) -> CassetteRecord | None:
        return self._index.get((template_id, prompt_hash, lane))

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def from_transcript(cls, transcript: Transcript) -> Cassette:
        return cls(
            [
                CassetteRecord(
                    template_id=i.template_id,
                    prompt_hash=i.rendered_prompt_hash,
                    lane=i.lane,
                    response_text=i.response_text,
                )
                for i in transcript.exchanges
            ]
        )

    def dumps(self) -> str:
        data = {
            "format": CASSETTE_FORMAT,
            "version": CASSETTE_VERSION,
            "records": [
                {
                    "template_id": i.template_id,
                    "prompt_hash": i.prompt_hash,
                    "lane": i.lane,
                    "response_text": i.response_text,
                }
                for i in self.records
            ],
        }
        body = json.dumps(data, indent=1, ensure_ascii=False) + "\n"
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        return body + f"{CHECKSUM_PREFIX}{digest}\n"

    @classmethod
    def loads(cls, text: str) -> Cassette:
        """Parse a cassette and check its integrity.

        Raises:
            CorruptCassette: If the checksum or the structure is wrong.
        """
        body, sep, last = text.rstrip("\n").rpartition("\n")
        if not sep or not last.startswith(CHECKSUM_PREFIX):
            raise CorruptCassette("Cassette has no checksum line")
        body += "\n"
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        if digest != last[len(CHECKSUM_PREFIX) :].strip():
            raise CorruptCassette("Cassette checksum mismatch")
        try:
            data = json.loads(body)
        except ValueError as error:
            raise CorruptCassette(f"Malformed cassette: {error}") from error
        if not isinstance(data, dict):
            raise CorruptCassette("Not a cassette file")
        if data.get("format") != CASSETTE_FORMAT:
            raise CorruptCassette("Not a cassette file")
        try:
            records = [
                CassetteRecord(
                    template_id=str(i["template_id"]),
                    prompt_hash=str(i["prompt_hash"]),
                    lane=int(i.get("lane", 0)),
                    response_text=str(i["response_text"]),
                )
                for i in data["records"]
            ]
        except (KeyError, TypeError, ValueError) as error:
            raise CorruptCassette(f"Malformed cassette: {error}") from error
        return cls(records)


class CassetteProvider(Provider):
    """Answer prompts from a recorded cassette.

    In strict mode (the default) a prompt that was not recorded for
    its lane raises `CassetteMiss`. Otherwise the lane-0 record of the
    same prompt is used when there is one.
    """

    kind = ProviderKind.CASSETTE

    def __init__(self, cassette: Cassette, strict: bool = True):
        self.cassette = cassette
        self.strict = strict

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        record = self.cassette.lookup(
            request.template_id, request.prompt_hash, request.lane
        )
        if record is None and not self.strict:
            record = self.cassette.lookup(
                request.template_id, request.prompt_hash, 0
            )
        if record is None:
            LOGGER.error(
                "Cassette miss for '%s' (lane %d)",
                request.template_id,
                request.lane,
            )
            raise CassetteMiss(
                request.template_id, request.prompt_hash, request.lane
            )
        return CompletionResponse(text=record.response_text)


def record_cassette(transcript: Transcript, path: str | pathlib.Path):
    """Write the exchanges of a run transcript to a cassette file."""
    cassette = Cassette.from_transcript(transcript)
    pathlib.Path(path).write_text(cassette.dumps(), encoding="utf-8")
    LOGGER.info("Recorded %d exchanges to %s", len(cassette), path)


def open_cassette(
    path: str | pathlib.Path, strict: bool = True
) -> CassetteProvider:
    """Open a cassette file for replay."""
    text = pathlib.Path(path).read_text(encoding="utf-8")
    return CassetteProvider(Cassette.loads(text), strict=strict)
