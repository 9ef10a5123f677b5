"""Commits: the only way the library changes.

A commit is applied to a snapshot and produces the next snapshot.
Application is deterministic given the snapshot and the commit.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Union

from optinsight.exceptions import CommitRejected
from optinsight.insights.insight import (
    EvidenceRole,
    Insight,
    InsightStatus,
)
from optinsight.insights.taxonomy import Track
from optinsight.insights.validation import validate_insight
from optinsight.library.snapshot import LibrarySnapshot


class CommitKind(str, Enum):
    """The kinds of library changes."""

    ADD_INSIGHT = "AddInsight"
    MERGE_INSIGHTS = "MergeInsights"
    REFINE_CONDITION = "RefineCondition"
    ADD_LABEL = "AddLabel"
    RETIRE_INSIGHT = "RetireInsight"
    UPDATE_PROFILE = "UpdateProfile"


@dataclass(frozen=True)
class AddInsight:
    insight: Insight


@dataclass(frozen=True)
class MergeInsights:
    """Merge a source insight into an Active target.

    The source is either an existing Active insight (``source_id``) or
    a new candidate (``source_insight``) that is stored as Merged.
    """

    target_id: int
    condition: str
    explanation: str
    example: str
    source_id: int | None = None
    source_insight: Insight | None = None
    iteration: int = 0


@dataclass(frozen=True)
class RefineCondition:
    insight_id: int
    condition: str
    iteration: int
    reason: str
    score: float  # The accepted p.
    baseline: float  # p with the current condition.


@dataclass(frozen=True)
class AddLabel:
    track: Track
    level1: str
    level2: str | None
    condition: str


@dataclass(frozen=True)
class RetireInsight:
    insight_id: int
    reason: str = ""


@dataclass(frozen=True)
class UpdateProfile:
    insight_id: int
    task_id: str
    role: EvidenceRole


Payload = Union[
    AddInsight,
    MergeInsights,
    RefineCondition,
    AddLabel,
    RetireInsight,
    UpdateProfile,
]

KINDS: dict[type, CommitKind] = {
    AddInsight: CommitKind.ADD_INSIGHT,
    MergeInsights: CommitKind.MERGE_INSIGHTS,
    RefineCondition: CommitKind.REFINE_CONDITION,
    AddLabel: CommitKind.ADD_LABEL,
    RetireInsight: CommitKind.RETIRE_INSIGHT,
    UpdateProfile: CommitKind.UPDATE_PROFILE,
}


@dataclass(frozen=True)
class Origin:
    """Who produced a commit."""

    worker_id: str = "main"
    task_id: str | None = None
    iteration: int | None = None


@dataclass(frozen=True)
class Commit:
    """A library change with its origin."""

    payload: Payload
    origin: Origin = Origin()

    @property
    def kind(self) -> CommitKind:
        return KINDS[type(self.payload)]

    def describe(self) -> dict[str, Any]:
        """Return a short summary for logs and reports."""
        summary: dict[str, Any] = {"kind": self.kind.value}
        payload = self.payload
        for name in ("insight_id", "target_id", "source_id", "task_id"):
            value = getattr(payload, name, None)
            if value is not None:
                summary[name] = value
        if self.origin.task_id is not None:
            summary["origin_task"] = self.origin.task_id
        return summary


def _active(snapshot: LibrarySnapshot, insight_id: int) -> Insight:
    insight = snapshot.insights.get(insight_id)
    if insight is None:
        raise CommitRejected(f"unknown insight {insight_id}")
    if not insight.is_active:
        raise CommitRejected(f"insight {insight_id} is not Active")
    return insight


def _next(
    snapshot: LibrarySnapshot,
    taxonomy=None,
    insights=None,
    profiles=None,
) -> LibrarySnapshot:
    return LibrarySnapshot(
        version=snapshot.version + 1,
        taxonomy=snapshot.taxonomy if taxonomy is None else taxonomy,
        insights=snapshot.insights if insights is None else insights,
        profiles=snapshot.profiles if profiles is None else profiles,
    )


def _canonical_path(snapshot: LibrarySnapshot, insight: Insight) -> Insight:
    report = validate_insight(insight, snapshot)
    if not report.valid:
        raise CommitRejected(report.violations[0])
    path = snapshot.taxonomy.resolve(insight.taxonomy)
    return replace(insight, taxonomy=path)


def apply_commit(
    snapshot: LibrarySnapshot, commit: Commit
) -> tuple[LibrarySnapshot, int | None]:
    """Apply a commit and return the new snapshot.

    Returns:
        out[0]: The next snapshot, with the version increased by one.
        out[1]: The id of the insight the commit created or changed.

    Raises:
        CommitRejected: If the commit cannot be applied.
    """
    payload = commit.payload
    if isinstance(payload, AddInsight):
        insight = _canonical_path(snapshot, payload.insight)
        if insight.status != InsightStatus.ACTIVE:
            raise CommitRejected("only Active insights can be added")
        new_id = snapshot.next_insight_id
        insights = dict(snapshot.insights)
        insights[new_id] = replace(insight, id=new_id)
        return _next(snapshot, insights=insights), new_id

    if isinstance(payload, MergeInsights):
        return _apply_merge(snapshot, payload)

    if isinstance(payload, RefineCondition):
        insight = _active(snapshot, payload.insight_id)
        if not payload.condition.strip():
            raise CommitRejected("condition empty")
        if not payload.score > payload.baseline:
            raise CommitRejected(
                "refinement does not improve the score "
                f"({payload.score} <= {payload.baseline})"
            )
        insights = dict(snapshot.insights)
        insights[insight.id] = insight.with_condition(
            payload.condition, payload.iteration, payload.reason
        )
        return _next(snapshot, insights=insights), insight.id

    if isinstance(payload, AddLabel):
        try:
            taxonomy = snapshot.taxonomy.with_label(
                payload.track,
                payload.level1,
                payload.level2,
                payload.condition,
            )
        except ValueError as error:
            raise CommitRejected(str(error)) from error
        return _next(snapshot, taxonomy=taxonomy), None

    if isinstance(payload, RetireInsight):
        insight = _active(snapshot, payload.insight_id)
        insights = dict(snapshot.insights)
        insights[insight.id] = replace(insight, status=InsightStatus.RETIRED)
        return _next(snapshot, insights=insights), insight.id

    if isinstance(payload, UpdateProfile):
        if payload.insight_id not in snapshot.insights:
            raise CommitRejected(f"unknown insight {payload.insight_id}")
        profiles = dict(snapshot.profiles)
        profile = snapshot.profile(payload.insight_id)
        profiles[payload.insight_id] = profile.with_role(
            payload.task_id, payload.role
        )
        return _next(snapshot, profiles=profiles), payload.insight_id

    raise CommitRejected(f"unknown commit payload {type(payload).__name__}")


def _apply_merge(
    snapshot: LibrarySnapshot, payload: MergeInsights
) -> tuple[LibrarySnapshot, int | None]:
    target = _active(snapshot, payload.target_id)
    for name in ("condition", "explanation", "example"):
        if not getattr(payload, name).strip():
            raise CommitRejected(f"{name} empty")
    insights = dict(snapshot.insights)
    profiles = dict(snapshot.profiles)
    if payload.source_id is not None:
        if payload.source_id == target.id:
            raise CommitRejected("cannot merge an insight into itself")
        source = _active(snapshot, payload.source_id)
    elif payload.source_insight is not None:
        source = _canonical_path(snapshot, payload.source_insight)
        source = replace(source, id=snapshot.next_insight_id)
    else:
        raise CommitRejected("merge without a source")
    if source.taxonomy.key() != target.taxonomy.key():
        raise CommitRejected("merged insights must share a level-2 label")

    absorbed = target.provenance.absorbed_task_ids + tuple(
        i
        for i in source.provenance.task_ids()
        if i not in target.provenance.task_ids()
    )
    merged = target
    if payload.condition != target.condition:
        merged = merged.with_condition(
            payload.condition,
            payload.iteration,
            f"merged with insight {source.id}",
        )
    merged = replace(
        merged,
        explanation=payload.explanation,
        example=payload.example,
        provenance=replace(target.provenance, absorbed_task_ids=absorbed),
    )
    insights[target.id] = merged
    insights[source.id] = replace(
        source, status=InsightStatus.MERGED, merged_into=target.id
    )
    profiles[target.id] = snapshot.profile(target.id).union(
        snapshot.profile(source.id)
    )
    return _next(snapshot, insights=insights, profiles=profiles), source.id
