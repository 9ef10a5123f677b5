"""Turn failed attempts into candidate insights."""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any

from optinsight.exceptions import (
    CommitRejected,
    JudgeUnavailable,
    ProviderError,
    UnparseableJudgeOutput,
)
from optinsight.insights.insight import Insight, Provenance, SupervisionMode
from optinsight.insights.validation import validate_insight
from optinsight.learning.exploration import describe_result
from optinsight.llm.parsing import parse_json_list

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.task import Attempt, Task
    from optinsight.library.commits import Origin
    from optinsight.library.store import LibraryStore
    from optinsight.llm.gateway import Gateway

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

TEXT_FIELDS = ("condition", "explanation", "example")


def taxonomy_views(store: LibraryStore) -> list[dict[str, str]]:
    """List every level-2 label with its condition for a prompt."""
    taxonomy = store.snapshot.taxonomy
    views = []
    for path in taxonomy.level2_paths():
        node = taxonomy.level2(path.track, path.level1, path.level2)
        views.append(
            {
                "track": path.track.value,
                "level1": path.level1,
                "level2": path.level2,
                "condition": node.condition if node is not None else "",
            }
        )
    return views


def _text(item: dict[str, Any], name: str) -> str:
    value = item.get(name)
    return "" if value is None else str(value).strip()


def extract_insights(
    task: Task,
    failed_attempt: Attempt,
    anchor_program: str,
    mode: SupervisionMode,
    gateway: Gateway,
    store: LibraryStore,
    iteration: int = 0,
    origin: Origin | None = None,
) -> list[Insight]:
    """Ask the model which insights explain a failure.

    Missing labels are added to the taxonomy through the store. Each
    returned candidate validates against the latest snapshot; rejected
    candidates are logged as ``candidate_rejected`` events.

    Args:
        task: The task that failed.
        failed_attempt: The attempt to learn from.
        anchor_program: The gold program or the exploration reference.
        mode: The supervision mode the anchor comes from.
        gateway: Access to the language model.
        store: Where missing labels are created.
        iteration: The training iteration, kept in the provenance.
        origin: Origin of label commits.

    Returns:
        The valid, uncommitted candidates.
    """
    try:
        text = gateway.complete(
            "generate_insights",
            {
                "task_description": task.description,
                "formulation": failed_attempt.formulation,
                "program": failed_attempt.program,
                "outcome": describe_result(failed_attempt.execution),
                "anchor_program": anchor_program,
                "mode": mode.value,
                "taxonomy": taxonomy_views(store),
            },
        )
        items = parse_json_list(text, key="insights")
    except UnparseableJudgeOutput:
        LOGGER.warning("Unparseable insights for task %s", task.id)
        gateway.transcript.event("extraction_unparseable", task_id=task.id)
        return []
    except (ProviderError, JudgeUnavailable) as error:
        LOGGER.warning("Extraction for task %s failed: %s", task.id, error)
        return []

    provenance = Provenance(
        source_task_id=task.id,
        supervision_mode=mode,
        created_iteration=iteration,
    )
    candidates = []
    for item in items:
        if not isinstance(item, dict):
            continue
        violations = [
            f"{name} empty" for name in TEXT_FIELDS if not _text(item, name)
        ]
        if not violations:
            try:
                path = store.ensure_label(
                    _text(item, "track"),
                    _text(item, "level1"),
                    _text(item, "level2"),
                    (
                        _text(item, "level1_condition"),
                        _text(item, "level2_condition"),
                    ),
                    origin=origin,
                )
            except (CommitRejected, ValueError) as error:
                violations.append(f"label not created: {error}")
        if violations:
            _reject(gateway, task, item, violations)
            continue
        candidate = Insight.candidate(
            taxonomy=path,
            condition=_text(item, "condition"),
            explanation=_text(item, "explanation"),
            example=_text(item, "example"),
            provenance=provenance,
        )
        report = validate_insight(candidate, store.snapshot)
        if not report.valid:
            _reject(gateway, task, item, report.violations)
            continue
        candidates.append(candidate)
    LOGGER.info(
        "Extracted %d candidate(s) from task %s", len(candidates), task.id
    )
    return candidates


def _reject(
    gateway: Gateway, task: Task, item: Any, violations: list[str]
):
    LOGGER.warning(
        "Rejected candidate from task %s: %s", task.id, "; ".join(violations)
    )
    gateway.transcript.event(
        "candidate_rejected",
        task_id=task.id,
        violations=list(violations),
        candidate=item,
    )
