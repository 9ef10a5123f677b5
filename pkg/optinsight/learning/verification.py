"""Local verification: the admission gate of the library."""
from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.insight import Insight
    from optinsight.insights.task import Task
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.solving.solver import TaskSolver

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


def local_verify(
    candidate: Insight,
    source_task: Task,
    snapshot: LibrarySnapshot,
    solver: TaskSolver,
    already_solved: bool = False,
) -> bool:
    """Re-solve the source task with the candidate injected.

    Retrieval is bypassed: the candidate is the only injected insight.

    Args:
        candidate: The insight to verify.
        source_task: The task the insight was extracted from.
        snapshot: The current library.
        solver: Used for the re-solve.
        already_solved: True if the task also succeeds without the
            candidate. A pass is then weak evidence and is logged.

    Returns:
        True if the re-solve succeeds.
    """
    attempt = solver.solve(source_task, snapshot, forced=[candidate])
    passed = attempt.succeeded
    solver.gateway.transcript.event(
        "local_verification",
        task_id=source_task.id,
        insight_id=candidate.id,
        passed=passed,
        vacuous=passed and already_solved,
    )
    if passed and already_solved:
        LOGGER.warning(
            "Vacuous verification on task %s: it succeeds without the "
            "insight too",
            source_task.id,
        )
    elif not passed:
        LOGGER.info(
            "Insight from task %s failed local verification", source_task.id
        )
    return passed


def verify_on_tasks(
    insight: Insight,
    task_ids: Iterable[str],
    tasks: Mapping[str, Task],
    snapshot: LibrarySnapshot,
    solver: TaskSolver,
) -> bool:
    """Check that an insight verifies on every known task given.

    Task ids missing from ``tasks`` are skipped.
    """
    known = [tasks[i] for i in task_ids if i in tasks]
    return all(local_verify(insight, i, snapshot, solver) for i in known)


def audit_library(
    snapshot: LibrarySnapshot,
    tasks: Mapping[str, Task],
    solver: TaskSolver,
) -> dict[int, bool]:
    """Replay local verification of every Active insight.

    Returns:
        For each Active insight whose source task is known, whether
        the source task still solves with the insight injected.
    """
    results = {}
    for insight in snapshot.active_insights():
        task = tasks.get(insight.provenance.source_task_id)
        if task is None:
            continue
        results[insight.id] = local_verify(insight, task, snapshot, solver)
    return results
