"""End-to-end solve of one task.

A solve retrieves insights, writes a formulation, turns it into a
program, runs the program and checks the objective. Programs that fail
to run are sent back to the model for a bounded number of repairs.
"""
from __future__ import annotations

import logging
from collections.abc import Collection, Sequence
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

from optinsight.exceptions import (
    EmptyResponse,
    JudgeUnavailable,
    NonFiniteValue,
    ProviderError,
)
from optinsight.execution import (
    ExecutionResult,
    Outcome,
    ProgramRunner,
    Tolerance,
    verify_objective,
)
from optinsight.insights.task import Attempt, Verdict
from optinsight.insights.taxonomy import Track
from optinsight.llm.parsing import extract_code
from optinsight.llm.providers import Decoding
from optinsight.retrieval import RetrievalConfig, RetrievalSet, retrieve

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.insights.insight import Insight
    from optinsight.insights.task import Task
    from optinsight.library.snapshot import LibrarySnapshot
    from optinsight.llm.gateway import Gateway

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

REPAIRABLE = (Outcome.NONZERO_EXIT, Outcome.NO_SENTINEL, Outcome.TIMEOUT)


@dataclass(frozen=True)
class SolveConfig:
    """Settings for solving a task.

    Attributes:
        max_repair_rounds: Upper bound on self-debug calls per attempt.
        tolerance: Tolerance of the objective check.
        self_debug_enabled: If False, failed programs are not repaired.
        debug_on_wrong_objective: If True, a wrong objective also
            triggers a repair. Off during training.
        include_examples: If False, injected insights are quoted
            without their example.
        evidence_bytes: How much stderr goes into a repair prompt.
        retrieval: Settings for retrieval.
    """

    max_repair_rounds: int = 3
    tolerance: Tolerance = field(default_factory=Tolerance)
    self_debug_enabled: bool = True
    debug_on_wrong_objective: bool = False
    include_examples: bool = True
    evidence_bytes: int = 2000
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)

    def __post_init__(self):
        if self.max_repair_rounds < 0:
            raise ValueError("max_repair_rounds must be non-negative")


def judge_execution(
    result: ExecutionResult | None, task: Task, tolerance: Tolerance
) -> Verdict:
    """Turn an execution result into a verdict for a task."""
    if result is None:
        return Verdict.RUNTIME_ERROR
    if result.outcome == Outcome.TIMEOUT:
        return Verdict.TIMEOUT
    if result.outcome != Outcome.OBJECTIVE_FOUND or result.objective is None:
        return Verdict.RUNTIME_ERROR
    try:
        ok = verify_objective(result.objective, task.answer_value, tolerance)
    except NonFiniteValue:
        return Verdict.WRONG_OBJECTIVE
    return Verdict.SUCCESS if ok else Verdict.WRONG_OBJECTIVE


def _empty_program_result() -> ExecutionResult:
    return ExecutionResult(
        exit_status=None,
        stdout_tail="",
        stderr_tail="The response contained no program.",
        objective=None,
        wall_time_ms=0.0,
        outcome=Outcome.NO_SENTINEL,
    )


class TaskSolver:
    """Solve tasks against a library snapshot.

    Attributes:
        gateway: Access to the language model.
        runner: Runs generated programs.
        config: The solve settings.
    """

    def __init__(
        self,
        gateway: Gateway,
        runner: ProgramRunner | None = None,
        config: SolveConfig | None = None,
    ):
        self.gateway = gateway
        self.runner = runner if runner is not None else ProgramRunner()
        self.config = config if config is not None else SolveConfig()

    def _views(self, insights: Sequence[Insight]) -> list[dict]:
        return [
            i.prompt_view(include_example=self.config.include_examples)
            for i in insights
        ]

    def formulate(
        self,
        task: Task,
        insights: Sequence[Insight] = (),
        lane: int = 0,
        decoding: Decoding | None = None,
    ) -> str:
        """Write the mathematical formulation of a task."""
        return self.gateway.complete(
            "formulate",
            {
                "task_description": task.description,
                "insights": self._views(insights),
            },
            decoding=decoding,
            lane=lane,
        ).strip()

    def generate_program(
        self,
        task: Task,
        formulation: str,
        insights: Sequence[Insight] = (),
        lane: int = 0,
        decoding: Decoding | None = None,
    ) -> str:
        """Turn a formulation into a program printing the sentinel."""
        if not formulation.strip():
            raise ValueError("Cannot generate a program without formulation")
        text = self.gateway.complete(
            "generate_program",
            {
                "task_description": task.description,
                "formulation": formulation,
                "insights": self._views(insights),
            },
            decoding=decoding,
            lane=lane,
        )
        return extract_code(text)

    def self_debug(
        self, task: Task, program: str, evidence: str, lane: int = 0
    ) -> str:
        """Ask the model to repair a program that failed to run."""
        text = self.gateway.complete(
            "self_debug",
            {
                "task_description": task.description,
                "program": program,
                "evidence": evidence,
            },
            lane=lane,
        )
        return extract_code(text)

    def execute(
        self, task: Task, program: str
    ) -> tuple[ExecutionResult, Verdict]:
        """Run a program and judge its objective."""
        if not program.strip():
            result = _empty_program_result()
        else:
            result = self.runner(program)
        return result, judge_execution(result, task, self.config.tolerance)

    def _seeded(self, template_id: str, seed: int | None) -> Decoding | None:
        if seed is None:
            return None
        return replace(self.gateway.decoding_for(template_id), seed=seed)

    def _needs_repair(self, result: ExecutionResult, verdict: Verdict):
        if result.outcome in REPAIRABLE:
            return True
        return (
            verdict == Verdict.WRONG_OBJECTIVE
            and self.config.debug_on_wrong_objective
        )

    def _evidence(self, task: Task, result: ExecutionResult) -> str:
        evidence = result.evidence(self.config.evidence_bytes)
        if result.outcome == Outcome.OBJECTIVE_FOUND:
            evidence += (
                f"\nThe program reported objective {result.objective}, "
                "which is not the optimal value."
            )
        return evidence

    def select(
        self,
        task: Task,
        snapshot: LibrarySnapshot,
        lane: int = 0,
        forced: Sequence[Insight] | None = None,
        excluded: Collection[int] = (),
    ) -> tuple[RetrievalSet, list[Insight], list[Insight]]:
        """Return the insights injected into the formulation and code.

        Forced insights bypass retrieval; excluded ids are removed
        from whatever retrieval returned.
        """
        if forced is not None:
            formulation = [
                i for i in forced if i.track != Track.CODE_IMPLEMENTATION
            ]
            code = [i for i in forced if i.track == Track.CODE_IMPLEMENTATION]
            selection = RetrievalSet(
                task_id=task.id,
                formulation_insights=tuple(i.id for i in formulation),
                code_insights=tuple(i.id for i in code),
            )
            self.gateway.transcript.event(
                "forced_injection", lane=lane, **selection.to_dict()
            )
            return selection, formulation, code
        selection = retrieve(
            task, snapshot, self.gateway, self.config.retrieval, lane=lane
        )
        if excluded:
            selection = RetrievalSet(
                task_id=selection.task_id,
                formulation_insights=tuple(
                    i for i in selection.formulation_insights
                    if i not in excluded
                ),
                code_insights=tuple(
                    i for i in selection.code_insights if i not in excluded
                ),
                matched_labels=selection.matched_labels,
                judgments=selection.judgments,
            )
        formulation = [
            snapshot.insights[i] for i in selection.formulation_insights
        ]
        code = [snapshot.insights[i] for i in selection.code_insights]
        return selection, formulation, code

    def solve(
        self,
        task: Task,
        snapshot: LibrarySnapshot,
        lane: int = 0,
        forced: Sequence[Insight] | None = None,
        excluded: Collection[int] = (),
        seed: int | None = None,
    ) -> Attempt:
        """Solve a task once and record the attempt.

        Args:
            task: The task to solve.
            snapshot: The library insights are retrieved from.
            lane: The trial index of this attempt.
            forced: Insights to inject instead of retrieving.
            excluded: Insight ids to leave out of the retrieved set.
            seed: Decoding seed for the formulation and the program.

        Returns:
            The attempt with its verdict. Model failures become a
            RuntimeError verdict instead of raising.
        """
        selection, formulation_insights, code_insights = self.select(
            task, snapshot, lane=lane, forced=forced, excluded=excluded
        )
        formulation = ""
        program = ""
        programs: list[str] = []
        result: ExecutionResult | None = None
        verdict = Verdict.RUNTIME_ERROR
        rounds = 0
        try:
            formulation = self.formulate(
                task,
                formulation_insights,
                lane,
                decoding=self._seeded("formulate", seed),
            )
            if not formulation:
                raise EmptyResponse("formulate")
            program = self.generate_program(
                task,
                formulation,
                code_insights,
                lane,
                decoding=self._seeded("generate_program", seed),
            )
            programs.append(program)
            result, verdict = self.execute(task, program)
            while (
                self.config.self_debug_enabled
                and rounds < self.config.max_repair_rounds
                and self._needs_repair(result, verdict)
            ):
                rounds += 1
                self.gateway.transcript.event(
                    "repair_round",
                    task_id=task.id,
                    lane=lane,
                    round=rounds,
                    outcome=result.outcome.value,
                )
                program = self.self_debug(
                    task, program, self._evidence(task, result), lane
                )
                programs.append(program)
                result, verdict = self.execute(task, program)
        except (ProviderError, JudgeUnavailable) as error:
            LOGGER.warning("Solve of task %s aborted: %s", task.id, error)

        attempt = Attempt(
            task_id=task.id,
            trial_index=lane,
            formulation_insights=selection.formulation_insights,
            code_insights=selection.code_insights,
            formulation=formulation,
            program=program,
            execution=result,
            verdict=verdict,
            repair_rounds_used=rounds,
            programs=tuple(programs),
        )
        self.gateway.transcript.event(
            "attempt",
            task_id=task.id,
            lane=lane,
            verdict=verdict.value,
            retrieved=list(attempt.retrieved),
            repair_rounds=rounds,
            objective=None if result is None else result.objective,
        )
        return attempt


def solve_task(
    task: Task,
    snapshot: LibrarySnapshot,
    config: SolveConfig,
    gateway: Gateway,
    harness: ProgramRunner,
    lane: int = 0,
) -> Attempt:
    """Solve one task with a throwaway `TaskSolver`."""
    return TaskSolver(gateway, harness, config).solve(task, snapshot, lane)
