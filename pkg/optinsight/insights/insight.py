"""Definition of insights and their performance profiles.

An insight is a structured 4-tuple (taxonomy, condition, explanation,
example) together with its provenance and the history of its
applicability condition.
"""
from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

from optinsight.insights.taxonomy import TaxonomyPath


class SupervisionMode(str, Enum):
    """What the insight was learned from."""

    GOLD_PROGRAM = "GoldProgram"
    ANSWER_ONLY = "AnswerOnly"


class InsightStatus(str, Enum):
    """Life-cycle state of an insight."""

    ACTIVE = "Active"
    MERGED = "Merged"
    RETIRED = "Retired"


class EvidenceRole(str, Enum):
    """How an insight relates to a task."""

    POSITIVE = "Positive"  # Applicable and contributed to success.
    NEGATIVE = "Negative"  # Retrieved and misleading.
    UNRETRIEVED = "Unretrieved"  # Not retrieved, would have helped.


@dataclass(frozen=True)
class Provenance:
    """Where an insight came from."""

    source_task_id: str
    supervision_mode: SupervisionMode
    created_iteration: int = 0
    # Source tasks of insights merged into this one:
    absorbed_task_ids: tuple[str, ...] = ()

    def task_ids(self) -> tuple[str, ...]:
        """Return every task the insight must keep solving."""
        return (self.source_task_id,) + tuple(
            i for i in self.absorbed_task_ids if i != self.source_task_id
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_task_id": self.source_task_id,
            "supervision_mode": self.supervision_mode.value,
            "created_iteration": self.created_iteration,
            "absorbed_task_ids": list(self.absorbed_task_ids),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Provenance:
        return cls(
            source_task_id=str(data["source_task_id"]),
            supervision_mode=SupervisionMode(data["supervision_mode"]),
            created_iteration=int(data.get("created_iteration", 0)),
            absorbed_task_ids=tuple(data.get("absorbed_task_ids", ())),
        )


@dataclass(frozen=True)
class ConditionRevision:
    """One entry in the condition history of an insight."""

    condition: str
    iteration: int
    reason: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "condition": self.condition,
            "iteration": self.iteration,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ConditionRevision:
        return cls(
            condition=str(data["condition"]),
            iteration=int(data["iteration"]),
            reason=str(data["reason"]),
        )


@dataclass(frozen=True)
class Insight:
    """A reusable optimization-modeling insight.

    The ``id`` is 0 for candidates that have not been committed yet;
    the commit queue assigns the stable identifier.
    """

    id: int
    taxonomy: TaxonomyPath
    condition: str
    explanation: str
    example: str
    provenance: Provenance
    condition_history: tuple[ConditionRevision, ...] = ()
    status: InsightStatus = InsightStatus.ACTIVE
    merged_into: int | None = None

    @classmethod
    def candidate(
        cls,
        taxonomy: TaxonomyPath,
        condition: str,
        explanation: str,
        example: str,
        provenance: Provenance,
    ) -> Insight:
        """Create an uncommitted insight with a one-entry history."""
        return cls(
            id=0,
            taxonomy=taxonomy,
            condition=condition,
            explanation=explanation,
            example=example,
            provenance=provenance,
            condition_history=(
                ConditionRevision(
                    condition=condition,
                    iteration=provenance.created_iteration,
                    reason="extracted",
                ),
            ),
        )

    @property
    def is_active(self) -> bool:
        return self.status == InsightStatus.ACTIVE

    @property
    def track(self):
        return self.taxonomy.track

    def prompt_view(self, include_example: bool = True) -> dict[str, Any]:
        """Return the fields quoted when the insight enters a prompt."""
        return {
            "id": self.id,
            "condition": self.condition,
            "explanation": self.explanation,
            "example": self.example if include_example else "",
        }

    def with_condition(
        self, condition: str, iteration: int, reason: str
    ) -> Insight:
        """Return a copy with a new condition appended to the history."""
        revision = ConditionRevision(condition, iteration, reason)
        return replace(
            self,
            condition=condition,
            condition_history=self.condition_history + (revision,),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "taxonomy": self.taxonomy.to_dict(),
            "condition": self.condition,
            "explanation": self.explanation,
            "example": self.example,
            "provenance": self.provenance.to_dict(),
            "condition_history": [
                i.to_dict() for i in self.condition_history
            ],
            "status": self.status.value,
            "merged_into": self.merged_into,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Insight:
        merged_into = data.get("merged_into")
        return cls(
            id=int(data["id"]),
            taxonomy=TaxonomyPath.from_dict(data["taxonomy"]),
            condition=str(data["condition"]),
            explanation=str(data["explanation"]),
            example=str(data["example"]),
            provenance=Provenance.from_dict(data["provenance"]),
            condition_history=tuple(
                ConditionRevision.from_dict(i)
                for i in data.get("condition_history", ())
            ),
            status=InsightStatus(data.get("status", "Active")),
            merged_into=None if merged_into is None else int(merged_into),
        )


@dataclass(frozen=True)
class PerformanceProfile:
    """The partition of tasks associated with an insight."""

    insight_id: int
    positive: frozenset[str] = field(default_factory=frozenset)
    negative: frozenset[str] = field(default_factory=frozenset)
    unretrieved: frozenset[str] = field(default_factory=frozenset)

    @property
    def evidence(self) -> frozenset[str]:
        """Return R_i, the union of the three sets."""
        return self.positive | self.negative | self.unretrieved

    def is_disjoint(self) -> bool:
        """Check that no task is in two sets."""
        return (
            not self.positive & self.negative
            and not self.positive & self.unretrieved
            and not self.negative & self.unretrieved
        )

    def role_of(self, task_id: str) -> EvidenceRole | None:
        """Return the role a task currently has, if any."""
        for role in EvidenceRole:
            if task_id in self.members(role):
                return role
        return None

    def members(self, role: EvidenceRole) -> frozenset[str]:
        return {
            EvidenceRole.POSITIVE: self.positive,
            EvidenceRole.NEGATIVE: self.negative,
            EvidenceRole.UNRETRIEVED: self.unretrieved,
        }[role]

    def with_role(
        self, task_id: str, role: EvidenceRole
    ) -> PerformanceProfile:
        """Move a task into one set, removing it from the others."""
        sets = {
            i: self.members(i) - {task_id} for i in EvidenceRole
        }
        sets[role] = sets[role] | {task_id}
        return PerformanceProfile(
            insight_id=self.insight_id,
            positive=sets[EvidenceRole.POSITIVE],
            negative=sets[EvidenceRole.NEGATIVE],
            unretrieved=sets[EvidenceRole.UNRETRIEVED],
        )

    def union(self, other: PerformanceProfile) -> PerformanceProfile:
        """Combine two profiles, used when insights are merged.

        A task with different roles in the two profiles keeps the role
        with the most weight: negative, then unretrieved, then positive.
        """
        profile = PerformanceProfile(self.insight_id)
        for role in (
            EvidenceRole.POSITIVE,
            EvidenceRole.UNRETRIEVED,
            EvidenceRole.NEGATIVE,
        ):
            for task_id in sorted(self.members(role) | other.members(role)):
                profile = profile.with_role(task_id, role)
        return profile

    def to_dict(self) -> dict[str, Any]:
        return {
            "insight_id": self.insight_id,
            "positive": sorted(self.positive),
            "negative": sorted(self.negative),
            "unretrieved": sorted(self.unretrieved),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PerformanceProfile:
        return cls(
            insight_id=int(data["insight_id"]),
            positive=frozenset(data.get("positive", ())),
            negative=frozenset(data.get("negative", ())),
            unretrieved=frozenset(data.get("unretrieved", ())),
        )

    @classmethod
    def from_roles(
        cls, insight_id: int, roles: Iterable[tuple[str, EvidenceRole]]
    ) -> PerformanceProfile:
        """Build a profile by applying (task, role) pairs in order."""
        profile = cls(insight_id)
        for task_id, role in roles:
            profile = profile.with_role(task_id, role)
        return profile
