"""Two-step retrieval of insights for a task.

Step one asks the judge which level-2 labels of the taxonomy are
relevant to the task. Step two checks the applicability condition of
every insight stored under the matched labels. Retained insights are
routed by track: DomainModeling and GeneralFormulation insights guide
the formulation, CodeImplementation insights guide the program.
"""
from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from optinsight.exceptions import (
    JudgeUnavailable,
    ProviderError,
    UnparseableJudgeOutput,
)
from optinsight.insights.taxonomy import TaxonomyPath, Track
from optinsight.llm.parsing import parse_json_list

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.insight import Insight
    from optinsight.insights.task import Task
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.llm.gateway import Gateway

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class RetrievalConfig:
    """Settings for retrieval.

    Attributes:
        enabled: If False, no insight is ever retrieved.
        batch_size: Insights per applicability-check call.
        max_formulation: Cap on injected formulation insights.
        max_code: Cap on injected code insights.
        use_taxonomy: If False, label matching is skipped and every
            Active insight goes to the applicability check.
    """

    enabled: bool = True
    batch_size: int = 8
    max_formulation: int = 12
    max_code: int = 6
    use_taxonomy: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


@dataclass(frozen=True)
class Judgment:
    """The applicability verdict for one insight."""

    insight_id: int
    applicable: bool
    rationale: str = ""


@dataclass(frozen=True)
class RetrievalSet:
    """The insights retained for a task, routed by track."""

    task_id: str
    formulation_insights: tuple[int, ...] = ()
    code_insights: tuple[int, ...] = ()
    matched_labels: tuple[TaxonomyPath, ...] = ()
    judgments: tuple[Judgment, ...] = field(default_factory=tuple)

    @property
    def retained(self) -> tuple[int, ...]:
        return tuple(sorted(self.formulation_insights + self.code_insights))

    def is_empty(self) -> bool:
        return not self.retained

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "formulation_insights": list(self.formulation_insights),
            "code_insights": list(self.code_insights),
            "matched_labels": [i.to_dict() for i in self.matched_labels],
            "judgments": [
                {
                    "id": i.insight_id,
                    "applicable": i.applicable,
                    "rationale": i.rationale,
                }
                for i in self.judgments
            ],
        }


def _label_views(snapshot: LibrarySnapshot) -> list[dict[str, str]]:
    views = []
    for path in snapshot.populated_paths():
        node = snapshot.taxonomy.level2(path.track, path.level1, path.level2)
        views.append(
            {
                "track": path.track.value,
                "level1": path.level1,
                "level2": path.level2,
                "condition": node.condition if node is not None else "",
            }
        )
    return views


def match_labels(
    task: Task,
    snapshot: LibrarySnapshot,
    gateway: Gateway,
    lane: int = 0,
) -> list[TaxonomyPath]:
    """Return the level-2 labels the judge finds relevant to a task.

    Only labels holding at least one Active insight are offered. Labels
    the judge invents are dropped and logged. An unparseable answer is
    asked once more with a note on the failure, and gives no labels if
    it still fails.
    """
    offered = snapshot.populated_paths()
    if not offered:
        return []
    variables = {
        "task_description": task.description,
        "labels": _label_views(snapshot),
    }
    items: list[Any] = []
    for asked in range(2):
        try:
            text = gateway.complete(
                "retrieve_label",
                {**variables, "attempt": asked + 1},
                lane=lane,
            )
            items = parse_json_list(text, key="labels")
            break
        except UnparseableJudgeOutput:
            LOGGER.warning(
                "Unparseable label match for task %s (try %d)",
                task.id,
                asked + 1,
            )
        except (ProviderError, JudgeUnavailable) as error:
            LOGGER.warning("Label matching unavailable: %s", error)
            break

    offered_keys = {i.key() for i in offered}
    matched: dict[tuple[str, str, str], TaxonomyPath] = {}
    for item in items:
        try:
            path = TaxonomyPath(
                Track.parse(str(item["track"])),
                str(item["level1"]),
                str(item["level2"]),
            )
        except (KeyError, TypeError, ValueError):
            path = None
        resolved = (
            snapshot.taxonomy.resolve(path) if path is not None else None
        )
        if resolved is None or resolved.key() not in offered_keys:
            LOGGER.warning(
                "Dropping hallucinated label %r for task %s", item, task.id
            )
            gateway.transcript.event(
                "hallucinated_label", task_id=task.id, label=item
            )
            continue
        matched.setdefault(resolved.key(), resolved)
    return [i for i in offered if i.key() in matched]


def check_applicability(
    task: Task,
    candidates: Sequence[Insight],
    gateway: Gateway,
    batch_size: int = 8,
    lane: int = 0,
) -> list[Judgment]:
    """Judge the condition of each candidate against the task.

    Candidates are judged in batches of at most ``batch_size``. If the
    answer for a batch cannot be parsed, the whole batch is judged not
    applicable.
    """
    judgments: list[Judgment] = []
    for start in range(0, len(candidates), batch_size):
        batch = candidates[start : start + batch_size]
        try:
            text = gateway.complete(
                "retrieve_condition",
                {
                    "task_description": task.description,
                    "candidates": [
                        {"id": i.id, "condition": i.condition} for i in batch
                    ],
                },
                lane=lane,
            )
            items = parse_json_list(text, key="insights")
        except (UnparseableJudgeOutput, ProviderError, JudgeUnavailable):
            LOGGER.warning(
                "Applicability check failed for task %s, "
                "rejecting %d candidates",
                task.id,
                len(batch),
            )
            judgments.extend(
                Judgment(i.id, False, "no usable judgment") for i in batch
            )
            continue
        verdicts: dict[int, tuple[bool, str]] = {}
        for item in items:
            try:
                verdicts[int(item["id"])] = (
                    item.get("applicable") is True,
                    str(item.get("rationale", "")),
                )
            except (KeyError, TypeError, ValueError, AttributeError):
                continue
        for insight in batch:
            applicable, rationale = verdicts.get(
                insight.id, (False, "not judged")
            )
            judgments.append(Judgment(insight.id, applicable, rationale))
    return judgments


def retrieve(
    task: Task,
    snapshot: LibrarySnapshot,
    gateway: Gateway,
    config: RetrievalConfig | None = None,
    lane: int = 0,
) -> RetrievalSet:
    """Retrieve the insights that apply to a task.

    Retained insights are ordered by id and routed by track. This
    never raises for judge problems; the worst case is an empty set.
    """
    if config is None:
        config = RetrievalConfig()
    if not config.enabled:
        return RetrievalSet(task_id=task.id)

    if config.use_taxonomy:
        labels = match_labels(task, snapshot, gateway, lane=lane)
        candidates = sorted(
            (i for path in labels for i in snapshot.insights_under(path)),
            key=lambda i: i.id,
        )
    else:
        labels = []
        candidates = snapshot.active_insights()
    judgments = check_applicability(
        task, candidates, gateway, batch_size=config.batch_size, lane=lane
    )
    applicable = {i.insight_id for i in judgments if i.applicable}
    kept = [i for i in candidates if i.id in applicable]
    formulation = [
        i.id for i in kept if i.track != Track.CODE_IMPLEMENTATION
    ][: config.max_formulation]
    code = [i.id for i in kept if i.track == Track.CODE_IMPLEMENTATION][
        : config.max_code
    ]
    result = RetrievalSet(
        task_id=task.id,
        formulation_insights=tuple(formulation),
        code_insights=tuple(code),
        matched_labels=tuple(labels),
        judgments=tuple(judgments),
    )
    gateway.transcript.event("retrieval", lane=lane, **result.to_dict())
    LOGGER.debug(
        "Retrieved %d insights for task %s", len(result.retained), task.id
    )
    return result
