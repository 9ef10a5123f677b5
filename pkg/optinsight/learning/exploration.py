"""Solver-guided self-exploration for answer-only tasks.

Without a gold program the known optimal objective is the only
supervision. The model proposes programs, each is executed, and the
accumulated history is fed back until a program reproduces the
objective. That program then stands in for the gold program.
"""
from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any

from optinsight.exceptions import JudgeUnavailable, ProviderError
from optinsight.execution import ExecutionResult, Outcome
from optinsight.insights.task import Verdict
from optinsight.llm.parsing import extract_code

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.task import Attempt, Task
    from optinsight.solving.solver import TaskSolver

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class ExplorationStep:
    program: str
    execution: ExecutionResult
    verdict: Verdict


@dataclass
class ExplorationState:
    """The progress of self-exploration on one task."""

    task_id: str
    budget_remaining: int
    history: list[ExplorationStep] = field(default_factory=list)
    reference_program: str | None = None

    @property
    def found(self) -> bool:
        return self.reference_program is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "proposals": len(self.history),
            "budget_remaining": self.budget_remaining,
            "found": self.found,
        }


def describe_result(result: ExecutionResult | None) -> str:
    """Summarize an execution for the exploration prompt."""
    if result is None:
        return "no program was produced"
    if result.outcome == Outcome.OBJECTIVE_FOUND:
        return f"objective {result.objective}"
    tail = result.stderr_tail.strip()[-500:]
    return f"{result.outcome.value}: {tail}" if tail else result.outcome.value


def self_explore(
    task: Task,
    failed_attempts: Sequence[Attempt],
    solver: TaskSolver,
    budget: int = 5,
    temperature: float = 0.7,
) -> ExplorationState:
    """Search for a program that reproduces the known objective.

    Args:
        task: An answer-only task.
        failed_attempts: Prior failures, quoted as context.
        solver: Used for the model and for running programs.
        budget: The number of proposals allowed.
        temperature: Decoding temperature after the first failure.

    Returns:
        The exploration state. ``reference_program`` is set if a
        proposal verified against the answer.
    """
    if budget < 1:
        raise ValueError("The exploration budget must be at least 1")
    state = ExplorationState(task_id=task.id, budget_remaining=budget)
    prior = [
        {"program": i.program, "result": describe_result(i.execution)}
        for i in failed_attempts
        if i.program.strip()
    ]
    gateway = solver.gateway
    base = gateway.decoding_for("self_explore")
    while state.budget_remaining > 0:
        history = prior + [
            {"program": i.program, "result": describe_result(i.execution)}
            for i in state.history
        ]
        decoding = base if not state.history else replace(
            base, temperature=temperature
        )
        try:
            text = gateway.complete(
                "self_explore",
                {
                    "task_description": task.description,
                    "answer": task.answer,
                    "history": history,
                },
                decoding=decoding,
            )
        except (ProviderError, JudgeUnavailable) as error:
            LOGGER.warning(
                "Exploration of task %s stopped: %s", task.id, error
            )
            break
        program = extract_code(text)
        result, verdict = solver.execute(task, program)
        state.history.append(ExplorationStep(program, result, verdict))
        state.budget_remaining -= 1
        if verdict == Verdict.SUCCESS:
            state.reference_program = program
            break
    gateway.transcript.event("exploration", **state.to_dict())
    if not state.found:
        LOGGER.info(
            "No reference program for task %s after %d proposals",
            task.id,
            len(state.history),
        )
    return state
