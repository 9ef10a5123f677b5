"""Reports on the library: case studies, label distribution, audit."""
from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any

from optinsight.evolution.diagnosis import JUDGE_ERRORS, judge_role
from optinsight.exceptions import MissingPairedRun
from optinsight.insights.taxonomy import Track
from optinsight.insights.task import Verdict

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.evaluation.metrics import EvalReport
    from optinsight.insights.task import Task
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.solving.solver import TaskSolver

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


class CaseOutcome(str, Enum):
    """What a retrieved insight did for a task."""

    SUCCESS = "Success"
    FAILURE = "Failure"
    INVALID = "Invalid"


@dataclass(frozen=True)
class CaseStudy:
    """One classified (insight, task) pair."""

    task_id: str
    insight_id: int
    outcome: CaseOutcome
    label: tuple[str, str]  # (track, level-1 label)
    rationale: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "insight_id": self.insight_id,
            "outcome": self.outcome.value,
            "track": self.label[0],
            "level1": self.label[1],
            "rationale": self.rationale,
        }


@dataclass
class OutcomeReport:
    """Case-study outcomes of retrieved insights."""

    cases: list[CaseStudy] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        counter = Counter(i.outcome for i in self.cases)
        return {i.value: counter.get(i, 0) for i in CaseOutcome}

    def by_label(self) -> dict[tuple[str, str], dict[str, int]]:
        """Outcome counts per (track, level-1 label)."""
        labels: dict[tuple[str, str], dict[str, int]] = {}
        for case in self.cases:
            counts = labels.setdefault(
                case.label, {i.value: 0 for i in CaseOutcome}
            )
            counts[case.outcome.value] += 1
        return dict(sorted(labels.items()))

    def to_dict(self) -> dict[str, Any]:
        return {
            "counts": self.counts(),
            "by_label": [
                {"track": key[0], "level1": key[1], **value}
                for key, value in self.by_label().items()
            ],
            "cases": [i.to_dict() for i in self.cases],
        }


def _classify(
    on_success: bool, off_success: bool, role: str | None
) -> CaseOutcome:
    if on_success and not off_success and role == "positive":
        return CaseOutcome.SUCCESS
    if not on_success and off_success and role == "negative":
        return CaseOutcome.FAILURE
    return CaseOutcome.INVALID


def case_study_report(
    snapshot: LibrarySnapshot,
    tasks: Sequence[Task],
    on_report: EvalReport,
    off_report: EvalReport,
    solver: TaskSolver,
) -> OutcomeReport:
    """Classify retrieved insights from paired evaluation runs.

    Tasks that succeed with and without retrieval are left out. For
    the others, each insight retrieved in the retrieval-on run is
    judged: contributory to a win over the retrieval-off run is a
    Success, misleading in a loss is a Failure, anything else is
    Invalid.

    Raises:
        MissingPairedRun: If a task is missing from either run.
    """
    ids = [i.id for i in tasks]
    missing = [
        i
        for i in ids
        if i not in on_report.verdicts or i not in off_report.verdicts
    ]
    if missing:
        raise MissingPairedRun(
            f"No paired verdicts for: {', '.join(sorted(missing))}"
        )
    attempts = {i.task_id: i for i in on_report.attempts}
    report = OutcomeReport()
    for task in tasks:
        on_success = on_report.verdicts[task.id] == Verdict.SUCCESS
        off_success = off_report.verdicts[task.id] == Verdict.SUCCESS
        if on_success and off_success:
            continue
        attempt = attempts.get(task.id)
        if attempt is None:
            raise MissingPairedRun(f"No retrieval-on attempt for {task.id}")
        for insight_id in attempt.retrieved:
            insight = snapshot.insights[insight_id]
            try:
                role, rationale = judge_role(
                    task, insight.prompt_view(), attempt, solver
                )
            except JUDGE_ERRORS as error:
                LOGGER.warning(
                    "No judgment of insight %d on %s: %s",
                    insight_id,
                    task.id,
                    error,
                )
                role, rationale = None, "judge unavailable"
            report.cases.append(
                CaseStudy(
                    task_id=task.id,
                    insight_id=insight_id,
                    outcome=_classify(on_success, off_success, role),
                    label=(insight.track.value, insight.taxonomy.level1),
                    rationale=rationale,
                )
            )
    return report


def _percent(count: int, total: int) -> float:
    return round(100.0 * count / total, 1) if total else 0.0


def taxonomy_report(snapshot: LibrarySnapshot) -> dict[str, Any]:
    """Count the Active insights per track and label.

    Every count comes with its percentage within the parent node.
    """
    insights = snapshot.active_insights()
    total = len(insights)
    tracks = []
    for track in Track:
        members = [i for i in insights if i.track == track]
        if not members:
            continue
        level1 = Counter(i.taxonomy.level1 for i in members)
        children = []
        for name, count in sorted(level1.items()):
            level2 = Counter(
                i.taxonomy.level2
                for i in members
                if i.taxonomy.level1 == name
            )
            children.append(
                {
                    "name": name,
                    "count": count,
                    "percent": _percent(count, len(members)),
                    "level2": [
                        {
                            "name": key,
                            "count": value,
                            "percent": _percent(value, count),
                        }
                        for key, value in sorted(level2.items())
                    ],
                }
            )
        tracks.append(
            {
                "track": track.value,
                "count": len(members),
                "percent": _percent(len(members), total),
                "level1": children,
            }
        )
    return {"total": total, "tracks": tracks}


def format_taxonomy_report(report: dict[str, Any]) -> str:
    """Render a taxonomy report as indented text."""
    lines = [f"Active insights: {report['total']}"]
    for track in report["tracks"]:
        lines.append(
            f"{track['track']}: {track['count']} ({track['percent']}%)"
        )
        for level1 in track["level1"]:
            lines.append(
                f"  {level1['name']}: {level1['count']} "
                f"({level1['percent']}%)"
            )
            for level2 in level1["level2"]:
                lines.append(
                    f"    {level2['name']}: {level2['count']} "
                    f"({level2['percent']}%)"
                )
    return "\n".join(lines)


def format_insight(snapshot: LibrarySnapshot, insight_id: int) -> str:
    """Render one insight with its history, provenance and profile."""
    insight = snapshot.insights[insight_id]
    profile = snapshot.profile(insight_id)
    provenance = insight.provenance
    lines = [
        f"## Insight {insight.id} ({insight.status.value})",
        "",
        f"- Taxonomy: {insight.taxonomy}",
        f"- Condition: {insight.condition}",
        f"- Explanation: {insight.explanation}",
        f"- Source task: {provenance.source_task_id} "
        f"({provenance.supervision_mode.value}, "
        f"iteration {provenance.created_iteration})",
    ]
    if insight.merged_into is not None:
        lines.append(f"- Merged into: {insight.merged_into}")
    if provenance.absorbed_task_ids:
        absorbed = ", ".join(provenance.absorbed_task_ids)
        lines.append(f"- Absorbed tasks: {absorbed}")
    lines.append(
        f"- Profile: {len(profile.positive)} positive, "
        f"{len(profile.negative)} negative, "
        f"{len(profile.unretrieved)} unretrieved"
    )
    lines += ["", "Example:", "", "```", insight.example, "```", ""]
    lines.append("Condition history:")
    lines.append("")
    for revision in insight.condition_history:
        lines.append(
            f"{revision.iteration}. [{revision.reason}] {revision.condition}"
        )
    return "\n".join(lines)


def export_library(snapshot: LibrarySnapshot) -> str:
    """Render the whole library as a Markdown audit document."""
    lines = [
        "# Insight library",
        "",
        f"Version {snapshot.version}, checksum `{snapshot.checksum()}`.",
        "",
        "# Taxonomy",
        "",
    ]
    for track in snapshot.taxonomy.to_dict()["tracks"]:
        for label in track["labels"]:
            lines.append(
                f"- **{track['track']} / {label['name']}**: "
                f"{label['condition']}"
            )
            for child in label["children"]:
                lines.append(
                    f"  - *{child['name']}*: {child['condition']}"
                )
    lines += ["", "# Insights", ""]
    for insight_id in snapshot.insights:
        lines.append(format_insight(snapshot, insight_id))
        lines.append("")
    return "\n".join(lines)
