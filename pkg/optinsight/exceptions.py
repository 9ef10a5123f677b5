"""Errors raised by the library engine."""
from __future__ import annotations


class OptInsightError(Exception):
    """Base class for all errors raised by optinsight."""


class CommitRejected(OptInsightError, ValueError):
    """A commit could not be applied to the current snapshot."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class QueueClosed(OptInsightError):
    """The commit queue no longer accepts commits."""


class CorruptFile(OptInsightError, ValueError):
    """A persisted library could not be read back."""

    def __init__(self, message: str, field_path: str = ""):
        if field_path:
            message = f"{message} (at '{field_path}')"
        super().__init__(message)
        self.field_path = field_path


class MissingVar(OptInsightError, KeyError):
    """A prompt template was rendered without a required variable."""

    def __init__(self, template_id: str, name: str):
        super().__init__(
            f"Template '{template_id}' requires the variable '{name}'"
        )
        self.template_id = template_id
        self.name = name

    def __str__(self) -> str:
        return str(self.args[0])


class CassetteMiss(OptInsightError, KeyError):
    """A prompt was not recorded in the cassette being replayed."""

    def __init__(self, template_id: str, prompt_hash: str, lane: int = 0):
        super().__init__(
            f"No recorded response for '{template_id}' "
            f"(hash {prompt_hash[:12]}, lane {lane})"
        )
        self.template_id = template_id
        self.prompt_hash = prompt_hash
        self.lane = lane

    def __str__(self) -> str:
        return str(self.args[0])


class ProviderError(OptInsightError):
    """The language-model provider failed after the retry budget."""


class EmptyResponse(ProviderError):
    """The model answered with no usable text."""

    def __init__(self, template_id: str):
        super().__init__(f"Empty response to '{template_id}'")
        self.template_id = template_id


class CorruptCassette(OptInsightError, ValueError):
    """A cassette file failed its integrity check."""


class UnparseableJudgeOutput(OptInsightError, ValueError):
    """A judge response did not contain the expected structure."""


class JudgeUnavailable(OptInsightError):
    """The judge could not be consulted."""


class RunnerNotFound(OptInsightError):
    """The configured runner command does not exist."""


class SandboxSetupFailed(OptInsightError):
    """The isolated working directory for a program could not be made."""


class NonFiniteValue(OptInsightError, ValueError):
    """A value that must be finite was not."""


class EmptyEvidenceSet(OptInsightError, ValueError):
    """A refinement candidate was scored against no tasks."""


class ParseError(OptInsightError, ValueError):
    """A dataset record could not be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateId(OptInsightError, ValueError):
    """Two records share the same identifier."""

    def __init__(self, task_id: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"Duplicate task id '{task_id}'{where}")
        self.task_id = task_id
        self.line = line


class MissingPairedRun(OptInsightError, ValueError):
    """A case study was requested without both paired runs."""
