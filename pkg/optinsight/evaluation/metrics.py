"""Success-rate evaluation and the library objective."""
from __future__ import annotations

import json
import logging
import pathlib
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from optinsight.insights.task import Verdict
from optinsight.library.snapshot import complexity

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.task import Attempt, Task
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.solving.solver import TaskSolver

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class DatasetScore:
    """Success count of one source dataset."""

    name: str
    successes: int
    total: int

    @property
    def rate(self) -> float | None:
        return self.successes / self.total if self.total else None


@dataclass
class EvalReport:
    """Success rates of a library over a set of tasks.

    Attributes:
        verdicts: The verdict of every task, by task id.
        sources: The source dataset of every task, by task id.
        attempts: The attempts behind the verdicts.
        header: Run fingerprint (library checksum, tolerance, ...).
    """

    verdicts: dict[str, Verdict] = field(default_factory=dict)
    sources: dict[str, str] = field(default_factory=dict)
    attempts: list[Attempt] = field(default_factory=list)
    header: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_attempts(
        cls,
        tasks: Sequence[Task],
        attempts: Sequence[Attempt],
        header: Mapping[str, Any] | None = None,
    ) -> EvalReport:
        return cls(
            verdicts={i.task_id: i.verdict for i in attempts},
            sources={i.id: i.source_dataset for i in tasks},
            attempts=list(attempts),
            header=dict(header or {}),
        )

    @property
    def datasets(self) -> list[DatasetScore]:
        """Scores per source dataset, sorted by name."""
        scores = []
        for name in sorted(set(self.sources.values())):
            ids = [i for i, j in self.sources.items() if j == name]
            successes = sum(
                self.verdicts.get(i) == Verdict.SUCCESS for i in ids
            )
            scores.append(DatasetScore(name, successes, len(ids)))
        return scores

    @property
    def total(self) -> int:
        return len(self.sources)

    @property
    def successes(self) -> int:
        return sum(
            self.verdicts.get(i) == Verdict.SUCCESS for i in self.sources
        )

    @property
    def micro(self) -> float | None:
        """Total successes over total tasks."""
        return self.successes / self.total if self.total else None

    @property
    def macro(self) -> float | None:
        """Unweighted mean of the per-dataset rates."""
        rates = [i.rate for i in self.datasets if i.rate is not None]
        return float(np.mean(rates)) if rates else None

    def success_rate(self) -> float:
        return self.micro or 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "header": dict(self.header),
            "datasets": {
                i.name: {
                    "successes": i.successes,
                    "total": i.total,
                    "rate": i.rate,
                }
                for i in self.datasets
            },
            "micro": self.micro,
            "macro": self.macro,
            "verdicts": {
                key: value.value
                for key, value in sorted(self.verdicts.items())
            },
        }

    def save(self, path: str | pathlib.Path):
        with open(path, "w", encoding="utf-8") as output:
            json.dump(self.to_dict(), output, indent=2, sort_keys=True)


def evaluate(
    snapshot: LibrarySnapshot,
    tasks: Sequence[Task],
    solver: TaskSolver,
    workers: int = 4,
    header: Mapping[str, Any] | None = None,
) -> EvalReport:
    """Solve every task once against a library and score the result.

    Args:
        snapshot: The library to evaluate.
        tasks: The tasks to solve.
        solver: Solves the tasks. Its retrieval settings decide the
            ablation arm.
        workers: Number of tasks solved at the same time.
        header: Extra fingerprint fields for the report.

    Returns:
        The evaluation report.
    """
    with ThreadPoolExecutor(
        max_workers=max(1, workers), thread_name_prefix="eval-worker"
    ) as pool:
        attempts = list(
            pool.map(lambda task: solver.solve(task, snapshot), tasks)
        )
    fingerprint = {
        "library_checksum": snapshot.checksum(),
        "tolerance": {
            "rel": solver.config.tolerance.rel,
            "abs": solver.config.tolerance.abs,
        },
        "provider": solver.gateway.provider.kind.value,
    }
    fingerprint.update(header or {})
    report = EvalReport.from_attempts(tasks, attempts, fingerprint)
    LOGGER.info(
        "Solved %d of %d task(s) (micro %s, macro %s)",
        report.successes,
        report.total,
        report.micro,
        report.macro,
    )
    return report


@dataclass(frozen=True)
class ObjectiveTrace:
    """Success rate penalized by library complexity."""

    iteration: int
    success_rate: float
    omega: int
    lam: float
    F: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "iteration": self.iteration,
            "success_rate": self.success_rate,
            "omega": self.omega,
            "lambda": self.lam,
            "F": self.F,
        }


def objective_trace(
    snapshot: LibrarySnapshot,
    report: EvalReport,
    lam: float = 0.0,
    iteration: int = 0,
) -> ObjectiveTrace:
    """Compute F = success rate - lambda * Omega for a library."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    rate = report.success_rate()
    omega = complexity(snapshot)
    return ObjectiveTrace(
        iteration=iteration,
        success_rate=rate,
        omega=omega,
        lam=lam,
        F=rate - lam * omega,
    )
