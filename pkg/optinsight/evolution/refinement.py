"""Refinement of insight applicability conditions.

A flagged insight gets candidate conditions from the model. Each
candidate is scored by replaying retrieval over the tasks in the
insight's evidence set R:

    p = (kept positives + corrected negatives + recovered unretrieved)
        / |R|

A candidate replaces the current condition only if its score strictly
exceeds the score of the current condition.
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Any

from optinsight.exceptions import (
    EmptyEvidenceSet,
    JudgeUnavailable,
    ProviderError,
    UnparseableJudgeOutput,
)
from optinsight.insights.insight import EvidenceRole
from optinsight.library.commits import RefineCondition
from optinsight.llm.parsing import parse_json_list
from optinsight.retrieval import retrieve

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.insight import Insight, PerformanceProfile
    from optinsight.insights.task import Task
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.llm.gateway import Gateway
    from optinsight.solving.solver import TaskSolver

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

EXCERPT_CHARS = 300


class Strategy(str, Enum):
    """How a candidate condition differs from the current one."""

    ADD_PRECONDITION = "AddPrecondition"
    KEYWORD_ANCHOR = "KeywordAnchor"
    MERGE_TRIGGERS = "MergeTriggers"
    EXCLUSION_CLAUSE = "ExclusionClause"
    GENERALIZE = "Generalize"

    @classmethod
    def parse(cls, value: Any) -> Strategy:
        key = "".join(str(value).split()).replace("_", "").casefold()
        for strategy in cls:
            if key == strategy.value.casefold():
                return strategy
        raise ValueError(f"Unknown refinement strategy '{value}'")


@dataclass(frozen=True)
class ReplayCounts:
    """Replay outcomes over the evidence set of an insight."""

    kept_positives: int
    corrected_negatives: int
    recovered_unretrieved: int
    evidence_size: int

    def __post_init__(self):
        if self.evidence_size < 1:
            raise EmptyEvidenceSet("The evidence set is empty")
        total = (
            self.kept_positives
            + self.corrected_negatives
            + self.recovered_unretrieved
        )
        if min(self.kept_positives, self.corrected_negatives) < 0 or (
            self.recovered_unretrieved < 0 or total > self.evidence_size
        ):
            raise ValueError("Replay counts do not fit the evidence set")

    @property
    def p(self) -> float:
        total = (
            self.kept_positives
            + self.corrected_negatives
            + self.recovered_unretrieved
        )
        return total / self.evidence_size

    def to_dict(self) -> dict[str, int]:
        return {
            "kept_positives": self.kept_positives,
            "corrected_negatives": self.corrected_negatives,
            "recovered_unretrieved": self.recovered_unretrieved,
            "evidence_size": self.evidence_size,
        }


@dataclass(frozen=True)
class RefinementCandidate:
    """A proposed condition, scored once its counts are known."""

    insight_id: int
    candidate_condition: str
    strategy: Strategy
    counts: ReplayCounts | None = None

    @property
    def p(self) -> float | None:
        return None if self.counts is None else self.counts.p

    def scored(self, counts: ReplayCounts) -> RefinementCandidate:
        return replace(self, counts=counts)

    def to_dict(self) -> dict[str, Any]:
        return {
            "insight_id": self.insight_id,
            "condition": self.candidate_condition,
            "strategy": self.strategy.value,
            "p": self.p,
            "counts": None if self.counts is None else self.counts.to_dict(),
        }


@dataclass(frozen=True)
class ReplayVerdict:
    """Whether a task retrieves the insight, and if it then succeeds."""

    retrieved: bool
    succeeded: bool | None = None


class RetrievalReplay(ABC):
    """Base class for replaying retrieval under a changed condition."""

    @abstractmethod
    def replay(
        self,
        task: Task,
        snapshot: LibrarySnapshot,
        insight_id: int,
        check_success: bool,
    ) -> ReplayVerdict:
        """Replay retrieval of a task against a snapshot.

        Args:
            task: The task to replay.
            snapshot: The library with the condition substituted.
            insight_id: The insight under refinement.
            check_success: If True and the insight is retrieved, also
                check that the task succeeds.
        """

    def __call__(
        self,
        task: Task,
        snapshot: LibrarySnapshot,
        insight_id: int,
        check_success: bool,
    ) -> ReplayVerdict:
        return self.replay(task, snapshot, insight_id, check_success)


class SolverReplay(RetrievalReplay):
    """Replay both retrieval steps, then solve with what was retrieved."""

    def __init__(self, solver: TaskSolver):
        self.solver = solver

    def replay(
        self,
        task: Task,
        snapshot: LibrarySnapshot,
        insight_id: int,
        check_success: bool,
    ) -> ReplayVerdict:
        selection = retrieve(
            task, snapshot, self.solver.gateway, self.solver.config.retrieval
        )
        retrieved = insight_id in selection.retained
        if not (retrieved and check_success):
            return ReplayVerdict(retrieved)
        forced = [snapshot.insights[i] for i in selection.retained]
        attempt = self.solver.solve(task, snapshot, forced=forced)
        return ReplayVerdict(True, attempt.succeeded)


def baseline_score(profile: PerformanceProfile) -> float:
    """Score of the unchanged condition: kept positives only.

    Raises:
        EmptyEvidenceSet: If the profile has no evidence.
    """
    size = len(profile.evidence)
    if size == 0:
        raise EmptyEvidenceSet(
            f"Insight {profile.insight_id} has no evidence"
        )
    return ReplayCounts(len(profile.positive), 0, 0, size).p


def _excerpt(task: Task | None, task_id: str) -> str:
    if task is None:
        return task_id
    text = " ".join(task.description.split())
    return f"{task_id}: {text[:EXCERPT_CHARS]}"


def propose_conditions(
    insight: Insight,
    profile: PerformanceProfile,
    tasks: Mapping[str, Task],
    gateway: Gateway,
    n_candidates: int = 4,
) -> list[RefinementCandidate]:
    """Ask the model for refined conditions of an insight.

    Insights without negative or unretrieved evidence are skipped.

    Returns:
        Up to ``n_candidates`` unscored candidates, in answer order.
    """
    if not profile.negative and not profile.unretrieved:
        LOGGER.debug("Insight %d has no misalignment", insight.id)
        return []

    def excerpts(ids):
        return [_excerpt(tasks.get(i), i) for i in sorted(ids)]

    try:
        items = parse_json_list(
            gateway.complete(
                "refine_conditions",
                {
                    "insight": insight.prompt_view(),
                    "positives": excerpts(profile.positive),
                    "negatives": excerpts(profile.negative),
                    "unretrieved": excerpts(profile.unretrieved),
                    "n_candidates": n_candidates,
                    "strategies": [i.value for i in Strategy],
                },
            ),
            key="candidates",
        )
    except (UnparseableJudgeOutput, ProviderError, JudgeUnavailable):
        LOGGER.warning("No usable refinements for insight %d", insight.id)
        return []
    candidates = []
    for item in items:
        if not isinstance(item, dict):
            continue
        condition = str(item.get("condition") or "").strip()
        try:
            strategy = Strategy.parse(item.get("strategy"))
        except ValueError:
            strategy = Strategy.GENERALIZE
        if condition:
            candidates.append(
                RefinementCandidate(insight.id, condition, strategy)
            )
    return candidates[:n_candidates]


def score_condition(
    candidate: RefinementCandidate,
    insight: Insight,
    profile: PerformanceProfile,
    tasks: Mapping[str, Task],
    snapshot: LibrarySnapshot,
    replay: RetrievalReplay,
) -> RefinementCandidate:
    """Score a candidate condition by retrieval replay.

    The condition is substituted into a replay copy of the snapshot.
    Positives count if still retrieved and solved, negatives if no
    longer retrieved, unretrieved tasks if now retrieved and solved.
    Tasks missing from ``tasks`` count for nothing.

    Raises:
        EmptyEvidenceSet: If the profile has no evidence.
    """
    evidence = sorted(profile.evidence)
    if not evidence:
        raise EmptyEvidenceSet(f"Insight {insight.id} has no evidence")
    substituted = snapshot.with_insight(
        replace(insight, condition=candidate.candidate_condition)
    )
    kept = corrected = recovered = 0
    for task_id in evidence:
        task = tasks.get(task_id)
        if task is None:
            LOGGER.warning("Task %s is unknown, not replayed", task_id)
            continue
        role = profile.role_of(task_id)
        verdict = replay(
            task,
            substituted,
            insight.id,
            check_success=role != EvidenceRole.NEGATIVE,
        )
        if role == EvidenceRole.POSITIVE:
            kept += int(verdict.retrieved and bool(verdict.succeeded))
        elif role == EvidenceRole.NEGATIVE:
            corrected += int(not verdict.retrieved)
        else:
            recovered += int(verdict.retrieved and bool(verdict.succeeded))
    return candidate.scored(
        ReplayCounts(kept, corrected, recovered, len(evidence))
    )


def refine_insight(
    insight: Insight,
    profile: PerformanceProfile,
    candidates: Sequence[RefinementCandidate],
    baseline: float | None = None,
    iteration: int = 0,
) -> RefineCondition | None:
    """Pick the best scored candidate if it beats the baseline.

    Ties on the best score go to the lowest index.

    Returns:
        The RefineCondition payload, or None for no change.
    """
    if baseline is None:
        baseline = baseline_score(profile)
    best: RefinementCandidate | None = None
    for candidate in candidates:
        if candidate.p is None:
            raise ValueError("Candidates must be scored before refinement")
        if best is None or candidate.p > best.p:  # type: ignore[operator]
            best = candidate
    if best is None or best.p is None or not best.p > baseline:
        return None
    return RefineCondition(
        insight_id=insight.id,
        condition=best.candidate_condition,
        iteration=iteration,
        reason=f"{best.strategy.value}: p {baseline:.3f} -> {best.p:.3f}",
        score=best.p,
        baseline=baseline,
    )
