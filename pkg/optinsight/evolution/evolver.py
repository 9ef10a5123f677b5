"""Run the diagnosis and refinement cycle over the library."""
from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from optinsight.evolution.diagnosis import DiagnosisRecord, diagnose
from optinsight.evolution.refinement import (
    RefinementCandidate,
    RetrievalReplay,
    SolverReplay,
    baseline_score,
    propose_conditions,
    refine_insight,
    score_condition,
)
from optinsight.library.commits import Commit, Origin

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.task import Attempt, Task
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.library.store import LibraryStore
    from optinsight.solving.solver import TaskSolver

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class EvolutionConfig:
    """Settings for library evolution.

    Attributes:
        enabled: If False, ``evolve`` does nothing.
        n_candidates: Candidate conditions requested per insight.
        workers: Threads used for the diagnostic re-solves.
    """

    enabled: bool = True
    n_candidates: int = 4
    workers: int = 4

    def __post_init__(self):
        if self.n_candidates < 1 or self.workers < 1:
            raise ValueError("n_candidates and workers must be at least 1")


@dataclass
class RefinementEntry:
    """What evolution did to one flagged insight."""

    insight_id: int
    before: str
    after: str | None = None
    strategy: str | None = None
    baseline: float | None = None
    p: float | None = None
    candidates: list[RefinementCandidate] = field(default_factory=list)
    profile: dict[str, int] = field(default_factory=dict)
    skipped: str | None = None

    @property
    def accepted(self) -> bool:
        return self.after is not None

    def deltas(self) -> dict[str, int]:
        """Expected change in the role counts under the new condition."""
        best = next(
            (
                i
                for i in self.candidates
                if i.candidate_condition == self.after
            ),
            None,
        )
        if best is None or best.counts is None:
            return {"positive": 0, "negative": 0, "unretrieved": 0}
        counts = best.counts
        return {
            "positive": (
                counts.kept_positives
                + counts.recovered_unretrieved
                - self.profile.get("positive", 0)
            ),
            "negative": -counts.corrected_negatives,
            "unretrieved": -counts.recovered_unretrieved,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "insight_id": self.insight_id,
            "before": self.before,
            "after": self.after,
            "accepted": self.accepted,
            "strategy": self.strategy,
            "baseline": self.baseline,
            "p": self.p,
            "profile": dict(self.profile),
            "deltas": self.deltas(),
            "candidates": [i.to_dict() for i in self.candidates],
            "skipped": self.skipped,
        }


@dataclass
class EvolutionReport:
    """The outcome of one evolution round."""

    iteration: int
    diagnosis: DiagnosisRecord | None = None
    entries: list[RefinementEntry] = field(default_factory=list)
    failed_tasks: list[str] = field(default_factory=list)

    @property
    def accepted(self) -> list[RefinementEntry]:
        return [i for i in self.entries if i.accepted]

    def to_dict(self) -> dict[str, Any]:
        return {
            "iteration": self.iteration,
            "failed_tasks": list(self.failed_tasks),
            "diagnosis": (
                None if self.diagnosis is None else self.diagnosis.to_dict()
            ),
            "refinements": [i.to_dict() for i in self.entries],
        }


class Evolver:
    """Diagnose the library and refine misaligned conditions.

    Attributes:
        solver: Solves tasks and gives access to the model.
        store: Where evolution commits go.
        config: The evolution settings.
        replay: Replays retrieval when scoring conditions.
    """

    def __init__(
        self,
        solver: TaskSolver,
        store: LibraryStore,
        config: EvolutionConfig | None = None,
        replay: RetrievalReplay | None = None,
    ):
        self.solver = solver
        self.store = store
        self.config = config if config is not None else EvolutionConfig()
        self.replay = replay if replay is not None else SolverReplay(solver)

    def resolve_all(
        self, tasks: Sequence[Task], snapshot: LibrarySnapshot
    ) -> list[Attempt]:
        """Solve every task once against a snapshot, in task order."""
        with ThreadPoolExecutor(
            max_workers=self.config.workers,
            thread_name_prefix="evolution-worker",
        ) as pool:
            return list(
                pool.map(lambda task: self.solver.solve(task, snapshot), tasks)
            )

    def refine(
        self,
        insight_id: int,
        tasks: Mapping[str, Task],
        iteration: int,
    ) -> RefinementEntry:
        """Propose, score and maybe accept a new condition."""
        snapshot = self.store.snapshot
        insight = snapshot.insights[insight_id]
        profile = snapshot.profile(insight_id)
        entry = RefinementEntry(
            insight_id=insight_id,
            before=insight.condition,
            profile={
                "positive": len(profile.positive),
                "negative": len(profile.negative),
                "unretrieved": len(profile.unretrieved),
            },
        )
        if not insight.is_active:
            entry.skipped = "not active"
            return entry
        candidates = propose_conditions(
            insight,
            profile,
            tasks,
            self.solver.gateway,
            n_candidates=self.config.n_candidates,
        )
        if not candidates:
            entry.skipped = "no candidates"
            return entry
        entry.baseline = baseline_score(profile)
        entry.candidates = [
            score_condition(i, insight, profile, tasks, snapshot, self.replay)
            for i in candidates
        ]
        payload = refine_insight(
            insight,
            profile,
            entry.candidates,
            baseline=entry.baseline,
            iteration=iteration,
        )
        if payload is None:
            LOGGER.info(
                "No refinement of insight %d beats p0=%.3f",
                insight_id,
                entry.baseline,
            )
            return entry
        result = self.store.commit(
            Commit(payload, Origin(worker_id="evolution", iteration=iteration))
        )
        if not result.applied:
            entry.skipped = f"rejected: {result.rejected}"
            return entry
        chosen = next(
            i
            for i in entry.candidates
            if i.candidate_condition == payload.condition
        )
        entry.after = payload.condition
        entry.strategy = chosen.strategy.value
        entry.p = payload.score
        LOGGER.info(
            "Refined insight %d with %s: p %.3f -> %.3f",
            insight_id,
            entry.strategy,
            payload.baseline,
            payload.score,
        )
        return entry

    def evolve(
        self,
        tasks: Sequence[Task],
        anchors: Mapping[str, str] | None = None,
        iteration: int = 0,
    ) -> EvolutionReport:
        """Run one diagnosis and refinement round.

        Args:
            tasks: The training tasks.
            anchors: Gold or reference programs by task id.
            iteration: The training iteration.

        Returns:
            The evolution report. Without failed tasks nothing changes.
        """
        report = EvolutionReport(iteration=iteration)
        if not self.config.enabled or not tasks:
            return report
        snapshot = self.store.snapshot
        attempts = self.resolve_all(tasks, snapshot)
        report.failed_tasks = [i.task_id for i in attempts if not i.succeeded]
        if not report.failed_tasks:
            LOGGER.info("No failed tasks, nothing to evolve")
            return report
        report.diagnosis = diagnose(
            list(zip(tasks, attempts)),
            snapshot,
            self.solver,
            anchors=anchors,
            store=self.store,
            iteration=iteration,
        )
        by_id = {i.id: i for i in tasks}
        for insight_id in report.diagnosis.flagged():
            report.entries.append(self.refine(insight_id, by_id, iteration))
        self.solver.gateway.transcript.event(
            "evolution",
            iteration=iteration,
            failed=len(report.failed_tasks),
            flagged=len(report.entries),
            accepted=len(report.accepted),
        )
        return report


def evolve(
    store: LibraryStore,
    tasks: Sequence[Task],
    solver: TaskSolver,
    anchors: Mapping[str, str] | None = None,
    config: EvolutionConfig | None = None,
    iteration: int = 0,
) -> tuple[LibrarySnapshot, EvolutionReport]:
    """Evolve the library once and return it with the report."""
    report = Evolver(solver, store, config=config).evolve(
        tasks, anchors, iteration
    )
    return store.snapshot, report
