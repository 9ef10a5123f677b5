"""Check insights against the invariants of the library."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from optinsight.insights.insight import Insight, InsightStatus

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.library.snapshot import LibrarySnapshot


@dataclass(frozen=True)
class ValidationReport:
    """The invariants an insight violates."""

    insight_id: int
    violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def validate_insight(
    candidate: Insight, snapshot: LibrarySnapshot
) -> ValidationReport:
    """List every invariant the insight violates in the snapshot."""
    violations = []
    path = candidate.taxonomy
    if not path.is_complete():
        violations.append("empty taxonomy path")
    elif snapshot.taxonomy.resolve(path) is None:
        violations.append("unresolved taxonomy path")
    if candidate.status == InsightStatus.ACTIVE:
        for name in ("condition", "explanation", "example"):
            if not getattr(candidate, name).strip():
                violations.append(f"{name} empty")
    if not candidate.condition_history:
        violations.append("condition history empty")
    elif candidate.condition_history[-1].condition != candidate.condition:
        violations.append("condition differs from condition history")
    if candidate.status == InsightStatus.MERGED:
        target = snapshot.insights.get(candidate.merged_into or -1)
        if target is None or not target.is_active:
            violations.append("merged into a missing insight")
    return ValidationReport(candidate.id, tuple(violations))
