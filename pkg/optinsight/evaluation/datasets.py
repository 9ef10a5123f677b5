"""Methods to read task datasets and split them.

A dataset file holds one JSON record per line with the keys ``id``,
``source``, ``description``, ``answer`` and the optional
``gold_program`` and ``problem_type``.
"""
from __future__ import annotations

import json
import logging
import math
import pathlib
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from optinsight.exceptions import DuplicateId, ParseError
from optinsight.insights.task import Task

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


class CompletionKind(str, Enum):
    """What the records of a dataset carry besides the answer."""

    SOLUTION_ONLY = "SolutionOnly"
    SOLUTION_AND_PROGRAM = "SolutionAndProgram"


@dataclass(frozen=True)
class Dataset:
    """A named collection of tasks."""

    name: str
    tasks: tuple[Task, ...]
    completion_kind: CompletionKind = CompletionKind.SOLUTION_ONLY

    def __post_init__(self):
        if self.completion_kind == CompletionKind.SOLUTION_AND_PROGRAM:
            missing = [i.id for i in self.tasks if not i.has_gold_program]
            if missing:
                raise ValueError(
                    f"Tasks without a gold program: {', '.join(missing)}"
                )

    def __len__(self) -> int:
        return len(self.tasks)

    @property
    def sources(self) -> list[str]:
        return sorted({i.source_dataset for i in self.tasks})


def read_task_file(filename: str | pathlib.Path) -> Iterator[Task]:
    """Read tasks from a dataset file, one record per line."""
    seen: set[str] = set()
    with open(filename, encoding="utf-8") as fileh:
        for number, line in enumerate(fileh, start=1):
            if not line.strip():
                continue
            try:
                task = Task.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError) as error:
                LOGGER.error(
                    "Could not read line %d of %s", number, filename
                )
                raise ParseError(str(error), number) from error
            except ValueError as error:
                # Non-finite or non-numeric answers end up here.
                LOGGER.error("Invalid task on line %d: %s", number, error)
                raise ParseError(str(error), number) from error
            if task.id in seen:
                raise DuplicateId(task.id, number)
            seen.add(task.id)
            yield task


def load_dataset(
    filename: str | pathlib.Path, name: str | None = None
) -> Dataset:
    """Load a dataset file.

    The completion kind is SolutionAndProgram when every task carries
    a gold program.

    Raises:
        ParseError: If a line is not a valid task record.
        DuplicateId: If two records share an id.
    """
    path = pathlib.Path(filename)
    tasks = tuple(read_task_file(path))
    kind = (
        CompletionKind.SOLUTION_AND_PROGRAM
        if tasks and all(i.has_gold_program for i in tasks)
        else CompletionKind.SOLUTION_ONLY
    )
    LOGGER.info("Loaded %d task(s) from %s", len(tasks), path)
    return Dataset(name=name or path.stem, tasks=tasks, completion_kind=kind)


def dump_dataset(tasks: Sequence[Task], filename: str | pathlib.Path):
    """Write tasks to a dataset file."""
    with open(filename, "w", encoding="utf-8") as output:
        for task in tasks:
            output.write(json.dumps(task.to_dict(), ensure_ascii=False))
            output.write("\n")


def stratified_split(
    tasks: Sequence[Task], train_fraction: float = 0.7, seed: int = 0
) -> tuple[list[Task], list[Task]]:
    """Split tasks into training and test parts per source dataset.

    Within each source, the tasks are shuffled with a seeded generator
    and the first ceil(fraction * n) go to training. Both parts keep
    the input order of the tasks.

    Args:
        tasks: The tasks to split.
        train_fraction: Share of each stratum used for training.
        seed: Seed for the shuffles.

    Returns:
        The training and test tasks.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    ids = [i.id for i in tasks]
    if len(set(ids)) != len(ids):
        duplicate = next(i for i in ids if ids.count(i) > 1)
        raise DuplicateId(duplicate)
    # Exact fraction, so that 0.7 * 10 gives 7 and not 8:
    fraction = Fraction(str(train_fraction))
    strata: dict[str, list[int]] = {}
    for index, task in enumerate(tasks):
        strata.setdefault(task.source_dataset, []).append(index)
    rng = np.random.default_rng(seed)
    train_index: set[int] = set()
    for name in sorted(strata):
        members = strata[name]
        size = math.ceil(fraction * len(members))
        order = rng.permutation(len(members))
        train_index.update(members[i] for i in order[:size])
        if size == len(members):
            LOGGER.warning(
                "Stratum '%s' has no test tasks (%d task(s))",
                name,
                len(members),
            )
    train = [j for i, j in enumerate(tasks) if i in train_index]
    test = [j for i, j in enumerate(tasks) if i not in train_index]
    return train, test
