"""Redundancy-aware merging of new insights into the library."""
from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING

from optinsight.exceptions import (
    JudgeUnavailable,
    ProviderError,
    UnparseableJudgeOutput,
)
from optinsight.insights.insight import Insight
from optinsight.library.commits import MergeInsights
from optinsight.llm.parsing import parse_json

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.llm.gateway import Gateway

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

# Verifies an insight by re-solving the given tasks with it injected.
MergeVerifier = Callable[[Insight, Sequence[str]], bool]


class MergeKind(str, Enum):
    DISTINCT = "Distinct"
    MERGE_INTO = "MergeInto"


@dataclass(frozen=True)
class MergeDecision:
    """The outcome of a merge check."""

    kind: MergeKind
    target_id: int | None = None
    condition: str = ""
    explanation: str = ""
    example: str = ""
    reason: str = ""

    @classmethod
    def distinct(cls, reason: str = "") -> MergeDecision:
        return cls(MergeKind.DISTINCT, reason=reason)

    @property
    def is_merge(self) -> bool:
        return self.kind == MergeKind.MERGE_INTO

    def merged(self, target: Insight) -> Insight:
        """Return the target as it reads after the merge."""
        merged = target
        if self.condition != target.condition:
            merged = merged.with_condition(
                self.condition, 0, "merge candidate"
            )
        return replace(
            merged, explanation=self.explanation, example=self.example
        )

    def payload(
        self,
        source: Insight | None = None,
        source_id: int | None = None,
        iteration: int = 0,
    ) -> MergeInsights:
        """Return the MergeInsights payload carrying out the decision."""
        if not self.is_merge or self.target_id is None:
            raise ValueError("Only MergeInto decisions produce a commit")
        return MergeInsights(
            target_id=self.target_id,
            condition=self.condition,
            explanation=self.explanation,
            example=self.example,
            source_id=source_id,
            source_insight=source,
            iteration=iteration,
        )


def merge_check(
    new_insight: Insight,
    snapshot: LibrarySnapshot,
    gateway: Gateway,
    verifier: MergeVerifier | None = None,
) -> MergeDecision:
    """Decide whether a new insight duplicates an existing one.

    Only Active insights under the same level-2 label are compared. A
    MergeInto decision stands only if the merged insight passes local
    verification on the source tasks of both constituents.

    Args:
        new_insight: The candidate (or an Active insight) to check.
        snapshot: The library to compare against.
        gateway: Used for the ``merge_insights`` judgment.
        verifier: Re-solves tasks with an insight injected. Without
            a verifier the judge decision is taken as is.

    Returns:
        Distinct, or MergeInto with the judge-produced merged text.
    """
    path = snapshot.taxonomy.resolve(new_insight.taxonomy)
    if path is None:
        return MergeDecision.distinct("unresolved taxonomy path")
    bucket = [
        i for i in snapshot.insights_under(path) if i.id != new_insight.id
    ]
    if not bucket:
        return MergeDecision.distinct("empty label bucket")

    try:
        text = gateway.complete(
            "merge_insights",
            {
                "new": new_insight.prompt_view(),
                "existing": [i.prompt_view() for i in bucket],
            },
        )
        answer = parse_json(text)
    except (ProviderError, JudgeUnavailable) as error:
        LOGGER.warning("Merge judge unavailable, keeping distinct: %s", error)
        return MergeDecision.distinct("judge unavailable")
    except UnparseableJudgeOutput:
        LOGGER.warning("Unparseable merge judgment, keeping distinct")
        return MergeDecision.distinct("unparseable judgment")

    if not isinstance(answer, dict):
        return MergeDecision.distinct("unparseable judgment")
    if str(answer.get("decision", "")).strip().lower() != "merge":
        return MergeDecision.distinct("judged distinct")
    targets = {i.id: i for i in bucket}
    try:
        target = targets[int(answer.get("target_id"))]
    except (KeyError, TypeError, ValueError):
        LOGGER.warning(
            "Merge judgment names an unknown target %r",
            answer.get("target_id"),
        )
        return MergeDecision.distinct("unknown merge target")

    decision = MergeDecision(
        MergeKind.MERGE_INTO,
        target_id=target.id,
        condition=str(answer.get("condition") or target.condition).strip(),
        explanation=str(
            answer.get("explanation") or target.explanation
        ).strip(),
        example=str(answer.get("example") or target.example).strip(),
    )
    if verifier is not None:
        task_ids = target.provenance.task_ids() + tuple(
            i
            for i in new_insight.provenance.task_ids()
            if i not in target.provenance.task_ids()
        )
        if not verifier(decision.merged(target), task_ids):
            LOGGER.info(
                "Merged text for insight %d failed local verification",
                target.id,
            )
            return MergeDecision.distinct("merged insight not verified")
    return decision
