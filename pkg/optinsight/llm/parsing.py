"""Parse structured content out of judge responses."""
from __future__ import annotations

import json
import re
from typing import Any

from optinsight.exceptions import UnparseableJudgeOutput

FENCE = re.compile(r"```([A-Za-z0-9_+-]*)[ \t]*\n(.*?)```", re.DOTALL)


def parse_json(text: str) -> Any:
    """Return the first JSON value found in a response.

    Fenced blocks are tried first, then the outermost bracketed span.

    Raises:
        UnparseableJudgeOutput: If no JSON value can be decoded.
    """
    candidates = [body for _, body in FENCE.findall(text)]
    for opening, closing in (("{", "}"), ("[", "]")):
        start, end = text.find(opening), text.rfind(closing)
        if 0 <= start < end:
            candidates.append(text[start : end + 1])
    candidates.append(text)
    for candidate in candidates:
        try:
            return json.loads(candidate.strip())
        except json.JSONDecodeError:
            continue
    raise UnparseableJudgeOutput(
        f"No JSON value in response: {text[:120]!r}"
    )


def parse_json_list(text: str, key: str | None = None) -> list[Any]:
    """Return a JSON list, unwrapping ``{key: [...]}`` if needed."""
    value = parse_json(text)
    if isinstance(value, dict) and key is not None and key in value:
        value = value[key]
    if not isinstance(value, list):
        raise UnparseableJudgeOutput(f"Expected a list, got {type(value)}")
    return value


def extract_code(text: str) -> str:
    """Return the program inside a fenced block, or the whole text."""
    blocks = FENCE.findall(text)
    for language, body in blocks:
        if language.lower() in ("python", "py"):
            return body.strip() + "\n"
    if blocks:
        return blocks[0][1].strip() + "\n"
    return text.strip() + "\n"
