"""Definition of the library learning loop.

Training runs iterations over the training tasks. Each iteration
processes the tasks in minibatches: the trials of a batch run in
parallel against the snapshot at batch start, then the batch learns
from its failures task by task, committing every locally verified
insight before the next task is handled. After the batches the library
is evolved, and training stops on a plateau in accuracy or when the
iteration budget is used up.
"""
from __future__ import annotations

import json
import logging
import pathlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any, Protocol

from optinsight.exceptions import QueueClosed
from optinsight.insights.insight import SupervisionMode
from optinsight.learning.exploration import self_explore
from optinsight.learning.extraction import extract_insights
from optinsight.learning.ordering import cluster_and_order, classify_problem
from optinsight.learning.stopping import (
    MaxIterations,
    Plateau,
    SoftExit,
)
from optinsight.learning.trials import TrialBundle, run_trials
from optinsight.learning.verification import local_verify, verify_on_tasks
from optinsight.library.commits import AddInsight, Commit, Origin
from optinsight.library.merging import merge_check
from optinsight.library.persistence import save_library
from optinsight.library.snapshot import complexity

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Iterator, Sequence

    from optinsight.insights.insight import Insight
    from optinsight.insights.task import Attempt, Task
    from optinsight.learning.stopping import StopCondition
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.library.store import LibraryStore
    from optinsight.solving.solver import TaskSolver


LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class LearningConfig:
    """Settings for library learning.

    Attributes:
        n_trials: Independent trials per task.
        exploration_budget: Proposals per task and iteration.
        exploration_temperature: Decoding temperature of retries.
        batch_size: Tasks per minibatch.
        max_iterations: Upper bound on training iterations.
        plateau_eps: Smallest accuracy gain that counts as progress.
        plateau_window: Iterations without progress before stopping.
        workers: Parallel task workers.
        seed: Seed of the trial decoding seeds.
    """

    n_trials: int = 3
    exploration_budget: int = 5
    exploration_temperature: float = 0.7
    batch_size: int = 8
    max_iterations: int = 5
    plateau_eps: float = 0.01
    plateau_window: int = 2
    workers: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.n_trials < 1 or self.batch_size < 1 or self.workers < 1:
            raise ValueError(
                "n_trials, batch_size and workers must be at least 1"
            )


class Evolution(Protocol):
    """Anything that evolves the library after an iteration."""

    def evolve(
        self,
        tasks: Sequence[Task],
        anchors: dict[str, str],
        iteration: int,
    ) -> Any:
        ...  # pragma: no cover


@dataclass
class BatchReport:
    """What one minibatch did to the library."""

    iteration: int
    index: int
    task_ids: list[str] = field(default_factory=list)
    first_trial_successes: list[str] = field(default_factory=list)
    successes: list[str] = field(default_factory=list)
    solved_on_recheck: list[str] = field(default_factory=list)
    unanchored: list[str] = field(default_factory=list)
    candidates: int = 0
    unverified: int = 0
    commits: list[dict[str, Any]] = field(default_factory=list)
    rejections: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class IterationReport:
    iteration: int
    accuracy: float
    batches: list[BatchReport]
    omega: int
    library_checksum: str
    evolution: dict[str, Any] | None = None
    archive: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "iteration": self.iteration,
            "accuracy": self.accuracy,
            "omega": self.omega,
            "library_checksum": self.library_checksum,
            "archive": self.archive,
            "batches": [i.to_dict() for i in self.batches],
            "evolution": self.evolution,
        }


@dataclass
class TrainReport:
    """The outcome of a training run."""

    iterations: list[IterationReport]
    stop_reason: str
    library_checksum: str
    omega: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "stop_reason": self.stop_reason,
            "library_checksum": self.library_checksum,
            "omega": self.omega,
            "accuracies": [i.accuracy for i in self.iterations],
            "iterations": [i.to_dict() for i in self.iterations],
        }

    def save(self, path: str | pathlib.Path):
        pathlib.Path(path).write_text(
            json.dumps(self.to_dict(), indent=1), encoding="utf-8"
        )


class Learner:
    """Learn a library from training tasks."""

    accuracies: list[float]  # First-trial accuracy per iteration.
    anchors: dict[str, str]  # Verified reference program per task.
    config: LearningConfig
    exe_dir: pathlib.Path | None  # Run directory, for archives and EXIT.
    iteration: int  # The last started iteration.
    stop_conditions: list[StopCondition]
    stop_reason: str | None

    def __init__(
        self,
        tasks: Sequence[Task],
        store: LibraryStore,
        solver: TaskSolver,
        config: LearningConfig | None = None,
        evolver: Evolution | None = None,
        exe_dir: str | pathlib.Path | None = None,
        stop_conditions: list[StopCondition] | None = None,
    ):
        self.tasks = list(tasks)
        self.tasks_by_id = {i.id: i for i in self.tasks}
        self.store = store
        self.solver = solver
        self.config = config if config is not None else LearningConfig()
        self.evolver = evolver
        self.exe_dir = None if exe_dir is None else pathlib.Path(exe_dir)
        self.iteration = 0
        self.accuracies = []
        self.anchors = {
            i.id: i.gold_program for i in self.tasks if i.gold_program
        }
        self.stop_reason = None
        self._problem_types: dict[str, str] = {}
        if stop_conditions is None:
            self.stop_conditions = [
                MaxIterations(),
                Plateau(self.config.plateau_eps, self.config.plateau_window),
                SoftExit(),
            ]
        else:
            self.stop_conditions = stop_conditions
        # Double check that we have at least one SoftExit:
        if not any(isinstance(i, SoftExit) for i in self.stop_conditions):
            self.stop_conditions.append(SoftExit())

    @property
    def gateway(self):
        return self.solver.gateway

    def _classify(self, task: Task) -> str:
        if task.id not in self._problem_types:
            self._problem_types[task.id] = classify_problem(
                task, self.gateway
            )
        return self._problem_types[task.id]

    def order(self, tasks: Sequence[Task]) -> list[Task]:
        return cluster_and_order(tasks, classifier=self._classify)

    def stop(self) -> bool:
        """Check if we should stop training."""
        if not self.tasks:
            self.stop_reason = "empty training set"
            return True
        for condition in self.stop_conditions:
            if condition(self):
                self.stop_reason = condition.reason
                return True
        return False

    def _trials(self, tasks: list[Task], snapshot: LibrarySnapshot):
        seed = self.config.seed + self.iteration

        def trial(task: Task) -> TrialBundle:
            return run_trials(
                task, snapshot, self.solver, self.config.n_trials, seed
            )

        with ThreadPoolExecutor(
            max_workers=self.config.workers,
            thread_name_prefix="task-worker",
        ) as pool:
            return list(pool.map(trial, tasks))

    def learn_batch(self, batch: Sequence[Task], index: int = 0):
        """Run trials for a batch and learn from its failures.

        Returns:
            The batch report.
        """
        report = BatchReport(iteration=self.iteration, index=index)
        ordered = self.order(batch)
        report.task_ids = [i.id for i in ordered]
        start = self.store.snapshot
        bundles = self._trials(ordered, start)
        for task, bundle in zip(ordered, bundles):
            self._learn_task(task, bundle, start, report)
        LOGGER.info(
            "Batch %d of iteration %d: %d commit(s), %d rejection(s)",
            index,
            self.iteration,
            len(report.commits),
            len(report.rejections),
        )
        return report

    def _anchor(
        self, task: Task, failures: Sequence[Attempt]
    ) -> tuple[str | None, SupervisionMode]:
        if task.gold_program:
            return task.gold_program, SupervisionMode.GOLD_PROGRAM
        mode = SupervisionMode.ANSWER_ONLY
        if task.id in self.anchors:
            return self.anchors[task.id], mode
        state = self_explore(
            task,
            failures,
            self.solver,
            budget=self.config.exploration_budget,
            temperature=self.config.exploration_temperature,
        )
        if state.reference_program is not None:
            self.anchors[task.id] = state.reference_program
        return state.reference_program, mode

    def _learn_task(
        self,
        task: Task,
        bundle: TrialBundle,
        start: LibrarySnapshot,
        report: BatchReport,
    ):
        if bundle.first_succeeded:
            report.first_trial_successes.append(task.id)
        if bundle.any_success:
            report.successes.append(task.id)
        failures = bundle.failures
        if not failures:
            return
        if not bundle.any_success and self.store.snapshot.version != (
            start.version
        ):
            recheck = self.solver.solve(task, self.store.snapshot)
            if recheck.succeeded:
                report.solved_on_recheck.append(task.id)
                return
        anchor, mode = self._anchor(task, failures)
        if anchor is None:
            report.unanchored.append(task.id)
            return
        origin = Origin(
            worker_id="learner", task_id=task.id, iteration=self.iteration
        )
        for attempt in failures:
            candidates = extract_insights(
                task,
                attempt,
                anchor,
                mode,
                self.gateway,
                self.store,
                iteration=self.iteration,
                origin=origin,
            )
            for candidate in candidates:
                report.candidates += 1
                if not local_verify(
                    candidate,
                    task,
                    self.store.snapshot,
                    self.solver,
                    already_solved=bundle.any_success,
                ):
                    report.unverified += 1
                    continue
                self._admit(candidate, origin, report)

    def _verify_merge(self, insight: Insight, task_ids: Sequence[str]):
        return verify_on_tasks(
            insight,
            task_ids,
            self.tasks_by_id,
            self.store.snapshot,
            self.solver,
        )

    def _admit(self, candidate: Insight, origin: Origin, report):
        decision = merge_check(
            candidate,
            self.store.snapshot,
            self.gateway,
            verifier=self._verify_merge,
        )
        if decision.is_merge:
            payload = decision.payload(
                source=candidate, iteration=self.iteration
            )
        else:
            payload = AddInsight(candidate)
        commit = Commit(payload, origin)
        result = self.store.commit(commit)
        if result.applied:
            report.commits.append(
                {
                    **commit.describe(),
                    "version": result.version,
                    "insight_id": result.insight_id,
                }
            )
        else:
            report.rejections.append(
                {**commit.describe(), "reason": result.rejected}
            )

    def run_iteration(self) -> IterationReport:
        """Run one learning and evolution cycle."""
        self.iteration += 1
        LOGGER.info("Starting training iteration %d", self.iteration)
        ordered = self.order(self.tasks)
        size = self.config.batch_size
        batches = [
            self.learn_batch(ordered[i : i + size], index=i // size)
            for i in range(0, len(ordered), size)
        ]
        solved = sum(len(i.first_trial_successes) for i in batches)
        accuracy = solved / len(self.tasks)
        self.accuracies.append(accuracy)
        evolution = None
        if self.evolver is not None:
            evolved = self.evolver.evolve(
                self.tasks, self.anchors, self.iteration
            )
            evolution = evolved.to_dict()
        snapshot = self.store.snapshot
        archive = None
        if self.exe_dir is not None:
            path = self.exe_dir / f"library.iter{self.iteration}.json"
            save_library(snapshot, path)
            archive = str(path)
        LOGGER.info(
            "Iteration %d: accuracy %.3f, %d active insight(s)",
            self.iteration,
            accuracy,
            complexity(snapshot),
        )
        return IterationReport(
            iteration=self.iteration,
            accuracy=accuracy,
            batches=batches,
            omega=complexity(snapshot),
            library_checksum=snapshot.checksum(),
            evolution=evolution,
            archive=archive,
        )

    def run(self) -> Iterator[IterationReport]:
        """Run training iterations until we should stop."""
        while not self.stop():
            yield self.run_iteration()

    def train(self) -> TrainReport:
        """Run training to the end and report."""
        iterations: list[IterationReport] = []
        try:
            for report in self.run():
                iterations.append(report)
        except QueueClosed:
            LOGGER.error(
                "The library queue closed during iteration %d",
                self.iteration,
            )
            self.stop_reason = "queue closed"
        snapshot = self.store.snapshot
        LOGGER.info("Training stopped: %s", self.stop_reason)
        return TrainReport(
            iterations=iterations,
            stop_reason=self.stop_reason or "stopped",
            library_checksum=snapshot.checksum(),
            omega=complexity(snapshot),
        )


def train(
    tasks: Sequence[Task],
    store: LibraryStore,
    solver: TaskSolver,
    config: LearningConfig | None = None,
    evolver: Evolution | None = None,
    exe_dir: str | pathlib.Path | None = None,
) -> tuple[LibrarySnapshot, TrainReport]:
    """Train a library and return it with the training report."""
    learner = Learner(
        tasks, store, solver, config=config, evolver=evolver, exe_dir=exe_dir
    )
    report = learner.train()
    return store.snapshot, report
