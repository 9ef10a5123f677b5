"""Diagnose how insights relate to the tasks they touched.

For each task the insights it retrieved are judged, and on failed tasks
each retrieved insight is removed in turn: if the task then succeeds
the insight misled the model. Failed tasks with an anchor program are
also searched for library insights that would have helped had they
been retrieved. The findings go into the performance profiles.
"""
from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from optinsight.exceptions import (
    JudgeUnavailable,
    ProviderError,
    UnparseableJudgeOutput,
)
from optinsight.insights.insight import EvidenceRole, PerformanceProfile
from optinsight.insights.task import Verdict
from optinsight.learning.exploration import describe_result
from optinsight.library.commits import Commit, Origin, UpdateProfile
from optinsight.llm.parsing import parse_json, parse_json_list

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.task import Attempt, Task
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.library.store import LibraryStore
    from optinsight.solving.solver import TaskSolver

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

JUDGE_ERRORS = (UnparseableJudgeOutput, ProviderError, JudgeUnavailable)


@dataclass(frozen=True)
class Evidence:
    """The role of one insight for one task.

    ``check_verdict`` is the verdict of the re-solve backing the role:
    the removal ablation for Negative, the injection re-solve for
    Unretrieved. Positive evidence rests on the judge alone.
    """

    insight_id: int
    task_id: str
    role: EvidenceRole
    check_verdict: Verdict | None = None
    rationale: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "insight_id": self.insight_id,
            "task_id": self.task_id,
            "role": self.role.value,
            "check_verdict": (
                None if self.check_verdict is None
                else self.check_verdict.value
            ),
            "rationale": self.rationale,
        }


@dataclass
class DiagnosisRecord:
    """The evidence gathered in one diagnosis round."""

    iteration: int
    evidence: list[Evidence] = field(default_factory=list)
    omitted: list[dict[str, Any]] = field(default_factory=list)

    def deltas(self) -> dict[int, PerformanceProfile]:
        """Return the profile changes of this round per insight."""
        roles: dict[int, dict[str, EvidenceRole]] = {}
        for item in self.evidence:
            roles.setdefault(item.insight_id, {})[item.task_id] = item.role
        return {
            key: PerformanceProfile.from_roles(key, value.items())
            for key, value in sorted(roles.items())
        }

    def flagged(self) -> list[int]:
        """Insights with negative or unretrieved evidence this round."""
        return sorted(
            key
            for key, value in self.deltas().items()
            if value.negative or value.unretrieved
        )

    def violations(self) -> list[str]:
        """List the broken invariants of the record."""
        found = []
        seen: dict[tuple[int, str], EvidenceRole] = {}
        for item in self.evidence:
            pair = (item.insight_id, item.task_id)
            if pair in seen and seen[pair] != item.role:
                found.append(f"conflicting roles for {pair}")
            seen[pair] = item.role
            if item.role != EvidenceRole.POSITIVE and (
                item.check_verdict != Verdict.SUCCESS
            ):
                found.append(
                    f"{item.role.value} evidence for {pair} "
                    "lacks a successful re-solve"
                )
        return found

    def to_dict(self) -> dict[str, Any]:
        return {
            "iteration": self.iteration,
            "evidence": [i.to_dict() for i in self.evidence],
            "omitted": list(self.omitted),
        }


def judge_role(
    task: Task,
    insight_view: dict[str, Any],
    attempt: Attempt,
    solver: TaskSolver,
) -> tuple[str, str]:
    """Ask whether an insight helped or misled an attempt.

    Returns:
        The role ("positive", "negative" or "neutral") and rationale.

    Raises:
        UnparseableJudgeOutput: If the answer has no usable role.
    """
    answer = parse_json(
        solver.gateway.complete(
            "diagnose_pos_neg",
            {
                "task_description": task.description,
                "insight": insight_view,
                "program": attempt.program,
                "outcome": describe_result(attempt.execution),
            },
        )
    )
    if not isinstance(answer, dict):
        raise UnparseableJudgeOutput("Expected an object with a role")
    role = str(answer.get("role", "")).strip().lower()
    if role not in ("positive", "negative", "neutral"):
        raise UnparseableJudgeOutput(f"Unknown role {role!r}")
    return role, str(answer.get("rationale", ""))


def find_unretrieved(
    task: Task,
    attempt: Attempt,
    anchor_program: str | None,
    snapshot: LibrarySnapshot,
    solver: TaskSolver,
) -> list[tuple[int, bool]]:
    """Find library insights that would have fixed a failed task.

    The judge lists the discrepancies between the generated program
    and the anchor, then picks the non-retrieved insights addressing
    them. Each pick is verified by re-solving the task with it
    injected next to the retrieved insights.

    Returns:
        ``(insight id, True)`` for every verified pick, by id.
    """
    if not anchor_program:
        return []
    gateway = solver.gateway
    try:
        issues = parse_json_list(
            gateway.complete(
                "diagnose_issues",
                {
                    "task_description": task.description,
                    "program": attempt.program,
                    "anchor_program": anchor_program,
                },
            ),
            key="issues",
        )
    except JUDGE_ERRORS:
        LOGGER.warning("No issue list for task %s", task.id)
        return []
    issues = [str(i) for i in issues if str(i).strip()]
    retrieved = set(attempt.retrieved)
    candidates = [
        i for i in snapshot.active_insights() if i.id not in retrieved
    ]
    if not issues or not candidates:
        return []
    try:
        picks = parse_json_list(
            gateway.complete(
                "diagnose_unretrieved",
                {
                    "task_description": task.description,
                    "issues": issues,
                    "candidates": [i.prompt_view() for i in candidates],
                },
            ),
            key="insights",
        )
    except JUDGE_ERRORS:
        LOGGER.warning("No unretrieved picks for task %s", task.id)
        return []
    by_id = {i.id: i for i in candidates}
    chosen = set()
    for item in picks:
        try:
            chosen.add(int(item["id"] if isinstance(item, dict) else item))
        except (KeyError, TypeError, ValueError):
            continue
    injected = [snapshot.insights[i] for i in attempt.retrieved]
    verified = []
    for insight_id in sorted(chosen & set(by_id)):
        check = solver.solve(
            task, snapshot, forced=[*injected, by_id[insight_id]]
        )
        if check.succeeded:
            verified.append((insight_id, True))
        else:
            LOGGER.info(
                "Insight %d does not fix task %s when injected",
                insight_id,
                task.id,
            )
    return verified


def diagnose(
    attempts: Sequence[tuple[Task, Attempt]],
    snapshot: LibrarySnapshot,
    solver: TaskSolver,
    anchors: Mapping[str, str] | None = None,
    store: LibraryStore | None = None,
    iteration: int = 0,
) -> DiagnosisRecord:
    """Partition the insight and task relations of a round.

    The removal ablation alone decides Negative evidence, so it runs
    even when the judge fails on a failed task. A failed judgment on a
    succeeded task omits the pair.

    Args:
        attempts: The latest attempt of each task.
        snapshot: The library the attempts ran against.
        solver: Used for judgments and re-solves.
        anchors: Gold or reference programs by task id.
        store: If given, each finding is committed as UpdateProfile.
        iteration: The training iteration.

    Returns:
        The diagnosis record.
    """
    anchors = anchors or {}
    record = DiagnosisRecord(iteration=iteration)
    for task, attempt in attempts:
        for insight_id in attempt.retrieved:
            insight = snapshot.insights[insight_id]
            try:
                role, rationale = judge_role(
                    task, insight.prompt_view(), attempt, solver
                )
            except JUDGE_ERRORS as error:
                LOGGER.warning(
                    "No judgment of insight %d on task %s: %s",
                    insight_id,
                    task.id,
                    error,
                )
                role, rationale = "", ""
                if attempt.succeeded:
                    record.omitted.append(
                        {"insight_id": insight_id, "task_id": task.id}
                    )
                    continue
            if attempt.succeeded:
                if role == "positive":
                    record.evidence.append(
                        Evidence(
                            insight_id,
                            task.id,
                            EvidenceRole.POSITIVE,
                            rationale=rationale,
                        )
                    )
                continue
            ablation = solver.solve(task, snapshot, excluded={insight_id})
            if ablation.succeeded:
                record.evidence.append(
                    Evidence(
                        insight_id,
                        task.id,
                        EvidenceRole.NEGATIVE,
                        check_verdict=ablation.verdict,
                        rationale=rationale,
                    )
                )
        if attempt.succeeded:
            continue
        found = find_unretrieved(
            task, attempt, anchors.get(task.id), snapshot, solver
        )
        for insight_id, _ in found:
            record.evidence.append(
                Evidence(
                    insight_id,
                    task.id,
                    EvidenceRole.UNRETRIEVED,
                    check_verdict=Verdict.SUCCESS,
                    rationale="fixed the task when injected",
                )
            )
    if store is not None:
        origin = Origin(worker_id="diagnosis", iteration=iteration)
        commits = [
            Commit(UpdateProfile(i.insight_id, i.task_id, i.role), origin)
            for i in record.evidence
        ]
        for ticket in store.enqueue_batch(commits):
            ticket.result()
    LOGGER.info(
        "Diagnosis found %d evidence item(s), %d flagged insight(s)",
        len(record.evidence),
        len(record.flagged()),
    )
    return record
