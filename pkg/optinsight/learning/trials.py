"""Independent trials of a task."""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.task import Attempt, Task
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.solving.solver import TaskSolver


@dataclass(frozen=True)
class TrialBundle:
    """The attempts of one task against one snapshot."""

    task_id: str
    attempts: tuple[Attempt, ...]

    def __post_init__(self):
        if not self.attempts:
            raise ValueError("A trial bundle needs at least one attempt")

    @property
    def any_success(self) -> bool:
        return any(i.succeeded for i in self.attempts)

    @property
    def failures(self) -> tuple[Attempt, ...]:
        """The failed attempts, which are all learning signals."""
        return tuple(i for i in self.attempts if not i.succeeded)

    @property
    def first_succeeded(self) -> bool:
        """Whether the lane-0 attempt succeeded."""
        return self.attempts[0].succeeded

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "any_success": self.any_success,
            "verdicts": [i.verdict.value for i in self.attempts],
        }


def trial_seeds(task_id: str, n_trials: int, seed: int = 0) -> list[int]:
    """Return the decoding seeds of the trials of a task."""
    rng = np.random.default_rng([seed, zlib.crc32(task_id.encode("utf-8"))])
    return [int(i) for i in rng.integers(0, 2**31 - 1, size=n_trials)]


def run_trials(
    task: Task,
    snapshot: LibrarySnapshot,
    solver: TaskSolver,
    n_trials: int = 3,
    seed: int = 0,
) -> TrialBundle:
    """Solve a task ``n_trials`` times.

    Every trial re-retrieves and uses its own lane and decoding seed,
    so recorded runs keep distinct responses per trial.
    """
    if n_trials < 1:
        raise ValueError("At least one trial is needed")
    seeds = trial_seeds(task.id, n_trials, seed)
    attempts = tuple(
        solver.solve(task, snapshot, lane=lane, seed=seeds[lane])
        for lane in range(n_trials)
    )
    return TrialBundle(task_id=task.id, attempts=attempts)
