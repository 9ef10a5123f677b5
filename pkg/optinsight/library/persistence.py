"""Save and load libraries and taxonomy seeds.

A library file is the canonical JSON document of a snapshot with a
``schema_version`` field, followed by one checksum line::

    #sha256=<hex digest of everything above the line>
"""
from __future__ import annotations

import hashlib
import json
import logging
import pathlib
from importlib import resources
from typing import Any

from optinsight.exceptions import CorruptFile
from optinsight.insights.taxonomy import Taxonomy
from optinsight.library.snapshot import LibrarySnapshot, canonical_json

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

SCHEMA_VERSION = 1
CHECKSUM_PREFIX = "#sha256="
SEED_RESOURCE = "taxonomy_seed.json"


def dumps_library(snapshot: LibrarySnapshot) -> str:
    """Return the text of a library file."""
    data = {"schema_version": SCHEMA_VERSION, **snapshot.to_dict()}
    body = canonical_json(data) + b"\n"
    digest = hashlib.sha256(body).hexdigest()
    return body.decode("utf-8") + f"{CHECKSUM_PREFIX}{digest}\n"


def save_library(snapshot: LibrarySnapshot, path: str | pathlib.Path):
    """Write a snapshot to a library file."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_library(snapshot), encoding="utf-8")
    LOGGER.info("Saved library v%d to %s", snapshot.version, path)


def _split_checksum(text: str, path: Any) -> dict[str, Any]:
    body, sep, last = text.rstrip("\n").rpartition("\n")
    if not sep or not last.startswith(CHECKSUM_PREFIX):
        LOGGER.error("Library file %s has no checksum line", path)
        raise CorruptFile("missing checksum line", field_path="checksum")
    body_bytes = (body + "\n").encode("utf-8")
    digest = hashlib.sha256(body_bytes).hexdigest()
    if digest != last[len(CHECKSUM_PREFIX) :].strip():
        LOGGER.error("Checksum mismatch in library file %s", path)
        raise CorruptFile("checksum mismatch", field_path="checksum")
    try:
        return json.loads(body)
    except json.JSONDecodeError as error:
        raise CorruptFile(f"invalid document: {error}") from error


def loads_library(text: str, path: Any = "<string>") -> LibrarySnapshot:
    """Parse the text of a library file."""
    data = _split_checksum(text, path)
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        LOGGER.error(
            "Unsupported schema_version %s in library file %s", version, path
        )
        raise CorruptFile(
            f"unsupported schema_version {version}",
            field_path="schema_version",
        )
    try:
        return LibrarySnapshot.from_dict(data)
    except KeyError as error:
        raise CorruptFile(
            "missing field", field_path=str(error.args[0])
        ) from error
    except (TypeError, ValueError) as error:
        raise CorruptFile(f"invalid value: {error}") from error


def load_library(path: str | pathlib.Path) -> LibrarySnapshot:
    """Read a snapshot from a library file.

    Raises:
        CorruptFile: On a schema-version mismatch or a bad checksum.
    """
    path = pathlib.Path(path)
    return loads_library(path.read_text(encoding="utf-8"), path)


def load_taxonomy(path: str | pathlib.Path | None = None) -> Taxonomy:
    """Load a taxonomy seed, the bundled one if no path is given."""
    if path is None:
        text = (
            resources.files("optinsight.library")
            .joinpath("data")
            .joinpath(SEED_RESOURCE)
            .read_text(encoding="utf-8")
        )
    else:
        text = pathlib.Path(path).read_text(encoding="utf-8")
    data = json.loads(text)
    try:
        return Taxonomy.from_dict(data.get("taxonomy", data))
    except (KeyError, ValueError) as error:
        raise CorruptFile(f"invalid taxonomy seed: {error}") from error


def seeded_snapshot(path: str | pathlib.Path | None = None) -> LibrarySnapshot:
    """Return an empty library holding only the seed taxonomy."""
    return LibrarySnapshot(version=0, taxonomy=load_taxonomy(path))
