"""Run generated optimization programs and check their objective.

Programs are executed as child processes in a fresh working directory.
A program reports its optimal objective by printing the sentinel line
``OPTIMAL_OBJECTIVE=<decimal>``; only the last such line counts.
"""
from __future__ import annotations

import logging
import math
import pathlib
import re
import shutil
import subprocess
import sys
import tempfile
import threading
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import IO, Any, cast

from optinsight.exceptions import (
    NonFiniteValue,
    RunnerNotFound,
    SandboxSetupFailed,
)

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

SENTINEL = "OPTIMAL_OBJECTIVE="
SENTINEL_LINE = re.compile(
    r"^OPTIMAL_OBJECTIVE=([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)$"
)
PROGRAM_NAME = "program.py"
READ_CHUNK = 8192
READER_GRACE_S = 5.0


class Outcome(str, Enum):
    """How a program run ended."""

    OBJECTIVE_FOUND = "ObjectiveFound"
    NO_SENTINEL = "NoSentinel"
    NONZERO_EXIT = "NonzeroExit"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class Tolerance:
    """Relative and absolute tolerance for objective checks."""

    rel: float = 1e-4
    abs: float = 1e-6


@dataclass(frozen=True)
class ExecutionLimits:
    """Limits applied to a single program run."""

    timeout_ms: int = 60_000
    max_output_bytes: int = 65_536


@dataclass(frozen=True)
class ExecutionResult:
    """The outcome of running one program."""

    exit_status: int | None
    stdout_tail: str
    stderr_tail: str
    objective: float | None
    wall_time_ms: float
    outcome: Outcome

    def __post_init__(self):
        found = self.outcome == Outcome.OBJECTIVE_FOUND
        if found != (self.objective is not None):
            raise ValueError(
                "An objective must be present exactly when it was found"
            )

    def evidence(self, max_bytes: int = 2000) -> str:
        """Return failure evidence for a repair prompt."""
        stderr = self.stderr_tail.encode()[-max_bytes:].decode(
            errors="ignore"
        )
        return f"outcome: {self.outcome.value}\nstderr:\n{stderr}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "exit_status": self.exit_status,
            "stdout_tail": self.stdout_tail,
            "stderr_tail": self.stderr_tail,
            "objective": self.objective,
            "wall_time_ms": self.wall_time_ms,
            "outcome": self.outcome.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExecutionResult:
        objective = data.get("objective")
        return cls(
            exit_status=data.get("exit_status"),
            stdout_tail=data.get("stdout_tail", ""),
            stderr_tail=data.get("stderr_tail", ""),
            objective=None if objective is None else float(objective),
            wall_time_ms=float(data.get("wall_time_ms", 0.0)),
            outcome=Outcome(data["outcome"]),
        )


def parse_objective(stdout: str) -> float | None:
    """Return the value of the last sentinel line in the output."""
    value = None
    for line in stdout.splitlines():
        match = SENTINEL_LINE.match(line.strip("\r"))
        if match:
            value = float(match.group(1))
    return value


def _tail(data: bytes | str | None, max_bytes: int) -> str:
    """Decode the last bytes of an output, starting on a whole character."""
    if data is None:
        return ""
    if isinstance(data, str):
        data = data.encode()
    data = data[-max_bytes:] if max_bytes > 0 else b""
    start = 0
    # UTF-8 continuation bytes look like 0b10xxxxxx.
    while start < min(len(data), 3) and data[start] & 0xC0 == 0x80:
        start += 1
    return data[start:].decode(errors="replace")


class TailReader(threading.Thread):
    """Drain an output stream of a child, keeping only its last bytes.

    Attributes:
        max_bytes: How many bytes of the stream are kept.
        truncated: True if earlier output was dropped.
    """

    def __init__(self, stream: IO[bytes], max_bytes: int):
        super().__init__(daemon=True)
        self.stream = stream
        self.max_bytes = max_bytes
        self.truncated = False
        self._data = bytearray()

    def run(self):
        with self.stream:
            for chunk in iter(partial(self.stream.read1, READ_CHUNK), b""):
                self._data += chunk
                excess = len(self._data) - self.max_bytes
                if excess > 0:
                    del self._data[:excess]
                    self.truncated = True

    def text(self) -> str:
        return _tail(bytes(self._data), self.max_bytes)

    def whole_lines(self) -> str:
        """Return the kept text without a line cut at its start."""
        text = self.text()
        if not self.truncated:
            return text
        _, _, rest = text.partition("\n")
        return rest


def run_program(
    program_text: str,
    runner_command: Sequence[str],
    limits: ExecutionLimits | None = None,
    keep_artifacts: bool = False,
) -> ExecutionResult:
    """Run a program file with the runner command.

    Output beyond ``limits.max_output_bytes`` per stream is discarded
    while the program runs, and the sentinel is read from what is kept.

    Args:
        program_text: The source of the program.
        runner_command: The command that executes a program file, the
            program path is appended as the last argument.
        limits: Timeout and output limits.
        keep_artifacts: If True, the working directory is kept.

    Returns:
        The execution result with the parsed objective.
    """
    if limits is None:
        limits = ExecutionLimits()
    if not program_text.strip():
        raise ValueError("Cannot run an empty program")
    if not runner_command:
        raise RunnerNotFound("No runner command configured")
    executable = shutil.which(runner_command[0])
    if executable is None:
        LOGGER.error("Runner '%s' was not found", runner_command[0])
        raise RunnerNotFound(f"Runner '{runner_command[0]}' was not found")
    try:
        workdir = pathlib.Path(tempfile.mkdtemp(prefix="optinsight-run-"))
        program = workdir / PROGRAM_NAME
        program.write_text(program_text, encoding="utf-8")
    except OSError as error:
        raise SandboxSetupFailed(str(error)) from error

    command = [executable, *runner_command[1:], str(program)]
    start = time.perf_counter()
    try:
        proc = subprocess.Popen(
            command,
            cwd=workdir,
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
        stdout = TailReader(
            cast(IO[bytes], proc.stdout), limits.max_output_bytes
        )
        stderr = TailReader(
            cast(IO[bytes], proc.stderr), limits.max_output_bytes
        )
        stdout.start()
        stderr.start()
        try:
            returncode: int | None = proc.wait(
                timeout=limits.timeout_ms / 1000.0
            )
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
            returncode = None
        wall = (time.perf_counter() - start) * 1000.0
        stdout.join(READER_GRACE_S)
        stderr.join(READER_GRACE_S)
        if stdout.truncated or stderr.truncated:
            LOGGER.debug(
                "Program output cut to its last %d bytes",
                limits.max_output_bytes,
            )
        objective = parse_objective(stdout.whole_lines())
        if returncode is None:
            outcome = Outcome.TIMEOUT
            objective = None
            wall = max(wall, float(limits.timeout_ms))
        elif returncode != 0:
            outcome = Outcome.NONZERO_EXIT
            objective = None
        elif objective is None:
            outcome = Outcome.NO_SENTINEL
        else:
            outcome = Outcome.OBJECTIVE_FOUND
        result = ExecutionResult(
            exit_status=returncode,
            stdout_tail=stdout.text(),
            stderr_tail=stderr.text(),
            objective=objective,
            wall_time_ms=wall,
            outcome=outcome,
        )
    finally:
        if not keep_artifacts:
            shutil.rmtree(workdir, ignore_errors=True)
    LOGGER.debug(
        "Program finished: %s (%.1f ms)", result.outcome.value, wall
    )
    return result


def verify_objective(
    found: float, truth: float, tol: Tolerance | None = None
) -> bool:
    """Check that an objective matches the known optimum.

    The check is ``|found - truth| <= max(abs, rel * |truth|)``.
    """
    if tol is None:
        tol = Tolerance()
    if not (math.isfinite(found) and math.isfinite(truth)):
        raise NonFiniteValue(
            f"Cannot compare non-finite objectives ({found}, {truth})"
        )
    return abs(found - truth) <= max(tol.abs, tol.rel * abs(truth))


@dataclass
class ProgramRunner:
    """Configured access to `run_program`."""

    runner_command: Sequence[str] = field(
        default_factory=lambda: [sys.executable]
    )
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)
    keep_artifacts: bool = False

    def run(self, program_text: str) -> ExecutionResult:
        """Run a program with the configured runner."""
        return run_program(
            program_text,
            self.runner_command,
            limits=self.limits,
            keep_artifacts=self.keep_artifacts,
        )

    def __call__(self, program_text: str) -> ExecutionResult:
        return self.run(program_text)
