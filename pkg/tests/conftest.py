"""Shared fixtures for the tests."""
import sys

import pytest

from optinsight.evaluation.synthetic import LESSONS, RuleBook, synthetic_tasks
from optinsight.execution import ExecutionLimits, ProgramRunner
from optinsight.insights.insight import Insight, Provenance, SupervisionMode
from optinsight.insights.taxonomy import TaxonomyPath
from optinsight.library.commits import AddInsight, Commit
from optinsight.library.persistence import seeded_snapshot
from optinsight.library.store import LibraryStore
from optinsight.llm.gateway import Gateway, Transcript
from optinsight.solving.solver import TaskSolver

STRICT = TaxonomyPath(
    "CodeImplementation", "Solver & API Syntax", "Strict Inequalities"
)


@pytest.fixture
def seeded():
    """An empty library holding the bundled taxonomy."""
    return seeded_snapshot()


@pytest.fixture
def make_candidate():
    """Return a factory of uncommitted insights."""

    def make(
        task_id="T1",
        path=STRICT,
        condition="Applies when the problem mentions 'strictly'.",
        explanation="Shift strict bounds by one unit on integers.",
        example="m.addConstr(x >= y + 1)",
        mode=SupervisionMode.GOLD_PROGRAM,
        iteration=0,
    ) -> Insight:
        return Insight.candidate(
            taxonomy=path,
            condition=condition,
            explanation=explanation,
            example=example,
            provenance=Provenance(task_id, mode, iteration),
        )

    return make


@pytest.fixture
def runner():
    """A program runner using this interpreter."""
    return ProgramRunner(
        [sys.executable], ExecutionLimits(timeout_ms=20_000)
    )


@pytest.fixture
def rulebook():
    return RuleBook()


@pytest.fixture
def gateway(rulebook):
    """A gateway answering with the synthetic rule book."""
    return Gateway(rulebook.provider(), transcript=Transcript())


@pytest.fixture
def tasks():
    return synthetic_tasks()


# The task each lesson insight is learned from.
LESSON_SOURCES = {
    "makespan": "S01",
    "bigm": "S04",
    "integer": "S07",
    "strict": "S08",
    "precedence": "S10",
}


@pytest.fixture
def lessons_snapshot():
    """The seeded library with one insight per synthetic lesson.

    Insight ids are 1 (makespan), 2 (bigm), 3 (integer), 4 (strict)
    and 5 (precedence).
    """
    with LibraryStore(seeded_snapshot()) as store:
        for lesson in LESSONS:
            path = store.ensure_label(
                lesson.track,
                lesson.level1,
                lesson.level2,
                (lesson.level1_condition, lesson.level2_condition),
            )
            store.commit(
                Commit(
                    AddInsight(
                        Insight.candidate(
                            taxonomy=path,
                            condition=lesson.condition,
                            explanation=lesson.explanation,
                            example=lesson.example,
                            provenance=Provenance(
                                LESSON_SOURCES[lesson.key],
                                SupervisionMode.GOLD_PROGRAM,
                            ),
                        )
                    )
                )
            )
        return store.snapshot


@pytest.fixture
def solver(gateway, runner):
    """A solver answering with the synthetic rule book."""
    return TaskSolver(gateway, runner)


@pytest.fixture
def tasks_by_id(tasks):
    return {i.id: i for i in tasks}
