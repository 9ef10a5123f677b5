"""Order a batch so that related tasks follow each other."""
from __future__ import annotations

import logging
import re
from collections.abc import Callable, Sequence
from typing import TYPE_CHECKING

from optinsight.exceptions import (
    JudgeUnavailable,
    ProviderError,
    UnparseableJudgeOutput,
)
from optinsight.llm.parsing import parse_json

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.task import Task
    from optinsight.llm.gateway import Gateway

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

TOKEN = re.compile(r"[a-z0-9]+")
UNKNOWN_TYPE = "UNKNOWN"

Classifier = Callable[["Task"], str]


def tokens(text: str) -> frozenset[str]:
    return frozenset(TOKEN.findall(text.lower()))


def jaccard(first: str, second: str) -> float:
    """Return the token-set Jaccard similarity of two texts."""
    a, b = tokens(first), tokens(second)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def classify_problem(task: Task, gateway: Gateway) -> str:
    """Ask the model for the formulation type of a task."""
    try:
        answer = parse_json(
            gateway.complete(
                "classify_problem", {"task_description": task.description}
            )
        )
        label = str(answer["problem_type"]).strip()
    except (
        UnparseableJudgeOutput,
        ProviderError,
        JudgeUnavailable,
        KeyError,
        TypeError,
    ):
        LOGGER.warning("Could not classify task %s", task.id)
        return UNKNOWN_TYPE
    return label or UNKNOWN_TYPE


def cluster_and_order(
    batch: Sequence[Task], classifier: Classifier | None = None
) -> list[Task]:
    """Group tasks by problem type, then by similarity.

    Groups appear in the order of their first member. Within a group
    the first member stays first and the others follow by descending
    Jaccard similarity to it; ties keep the input order.

    Args:
        batch: The tasks to order.
        classifier: Gives the problem type of untagged tasks.

    Returns:
        The ordered tasks.
    """
    groups: dict[str, list[Task]] = {}
    for task in batch:
        kind = task.problem_type
        if not kind and classifier is not None:
            kind = classifier(task)
        key = (kind or UNKNOWN_TYPE).strip().upper()
        groups.setdefault(key, []).append(task)
    ordered: list[Task] = []
    for members in groups.values():
        head, rest = members[0], members[1:]
        rest = sorted(
            rest, key=lambda i: -jaccard(head.description, i.description)
        )
        ordered.extend([head, *rest])
    return ordered
