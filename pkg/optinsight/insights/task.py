"""Definition of tasks and solve attempts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Any

from optinsight.execution import ExecutionResult


class Verdict(str, Enum):
    """The verdict of one solve attempt."""

    SUCCESS = "Success"
    WRONG_OBJECTIVE = "WrongObjective"
    RUNTIME_ERROR = "RuntimeError"
    TIMEOUT = "Timeout"


def normalize_answer(value: Any) -> str:
    """Return an answer as a finite decimal string.

    Raises:
        ValueError: If the value is not a finite number.
    """
    try:
        number = Decimal(str(value).strip())
    except InvalidOperation as error:
        raise ValueError(f"Answer '{value}' is not a number") from error
    if not number.is_finite():
        raise ValueError(f"Answer '{value}' is not finite")
    return str(value).strip()


@dataclass(frozen=True)
class Task:
    """A natural-language optimization problem."""

    id: str
    source_dataset: str
    description: str
    answer: str  # Optimal objective, kept as a decimal string.
    gold_program: str | None = None
    problem_type: str | None = None

    def __post_init__(self):
        if not str(self.id).strip():
            raise ValueError("A task needs a non-empty id")
        if not self.description.strip():
            raise ValueError(f"Task '{self.id}' has an empty description")
        object.__setattr__(self, "answer", normalize_answer(self.answer))

    @property
    def answer_value(self) -> float:
        """The answer parsed to floating point."""
        value = float(self.answer)
        if not math.isfinite(value):
            raise ValueError(f"Answer of task '{self.id}' is not finite")
        return value

    @property
    def has_gold_program(self) -> bool:
        return bool(self.gold_program and self.gold_program.strip())

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "id": self.id,
            "source": self.source_dataset,
            "description": self.description,
            "answer": self.answer,
        }
        if self.gold_program is not None:
            data["gold_program"] = self.gold_program
        if self.problem_type is not None:
            data["problem_type"] = self.problem_type
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Task:
        return cls(
            id=str(data["id"]),
            source_dataset=str(data.get("source", "")),
            description=str(data["description"]),
            answer=data["answer"],
            gold_program=data.get("gold_program"),
            problem_type=data.get("problem_type"),
        )


@dataclass(frozen=True)
class Attempt:
    """One end-to-end solve trace for a task."""

    task_id: str
    trial_index: int
    formulation_insights: tuple[int, ...]
    code_insights: tuple[int, ...]
    formulation: str
    program: str
    execution: ExecutionResult | None
    verdict: Verdict
    repair_rounds_used: int = 0
    programs: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.trial_index < 0:
            raise ValueError("The trial index must be non-negative")

    @property
    def retrieved(self) -> tuple[int, ...]:
        """All injected insight ids."""
        return self.formulation_insights + self.code_insights

    @property
    def succeeded(self) -> bool:
        return self.verdict == Verdict.SUCCESS

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "trial_index": self.trial_index,
            "formulation_insights": list(self.formulation_insights),
            "code_insights": list(self.code_insights),
            "formulation": self.formulation,
            "program": self.program,
            "execution": (
                None if self.execution is None else self.execution.to_dict()
            ),
            "verdict": self.verdict.value,
            "repair_rounds_used": self.repair_rounds_used,
        }
