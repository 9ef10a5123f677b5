"""Engine configuration.

The configuration is a tree of dataclasses, one section per part of
the engine. It can be read from a YAML file whose top-level keys are
the section names::

    provider:
      kind: live
      model: gpt-4o
    learning:
      batch_size: 8
      max_iterations: 5

Keys that do not name a setting are an error.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import pathlib
from dataclasses import dataclass, field, replace
from typing import Any

import yaml

from optinsight.evolution.evolver import EvolutionConfig
from optinsight.execution import ExecutionLimits, ProgramRunner, Tolerance
from optinsight.learning.training import LearningConfig
from optinsight.llm.providers import Decoding, ProviderKind
from optinsight.retrieval import RetrievalConfig
from optinsight.solving.solver import SolveConfig

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class ProviderConfig:
    """Where completions come from and how they are decoded.

    Attributes:
        kind: "Scripted", "Cassette" or "Live".
        model: Model name for the live provider.
        endpoint: Base URL of an OpenAI-compatible endpoint.
        api_key_env: Environment variable holding the API key.
        max_attempts: Wire calls per completion before giving up.
        backoff_s: First retry delay, doubled after every failure.
        cassette: Cassette file replayed in Cassette mode.
        strict: If False, a cassette miss falls back to lane 0.
        temperature: Default decoding temperature.
        max_tokens: Default completion length.
        overrides: Decoding temperature per template id.
    """

    kind: str = ProviderKind.SCRIPTED.value
    model: str = "gpt-4o"
    endpoint: str | None = None
    api_key_env: str = "OPENAI_API_KEY"
    max_attempts: int = 3
    backoff_s: float = 1.0
    cassette: str | None = None
    strict: bool = True
    temperature: float = 0.0
    max_tokens: int = 2048
    overrides: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        kinds = {i.value.casefold(): i.value for i in ProviderKind}
        if str(self.kind).casefold() not in kinds:
            raise ValueError(f"Unknown provider kind '{self.kind}'")
        object.__setattr__(self, "kind", kinds[str(self.kind).casefold()])

    def decoding(self) -> Decoding:
        return Decoding(
            temperature=self.temperature, max_tokens=self.max_tokens
        )

    def decoding_overrides(self) -> dict[str, Decoding]:
        return {
            key: replace(self.decoding(), temperature=float(value))
            for key, value in sorted(self.overrides.items())
        }


@dataclass(frozen=True)
class ExecutionConfig:
    """How generated programs are run and checked."""

    runner_command: tuple[str, ...] = ()  # Empty: this interpreter.
    timeout_ms: int = 60_000
    max_output_bytes: int = 65_536
    keep_artifacts: bool = False
    tolerance_rel: float = 1e-4
    tolerance_abs: float = 1e-6

    def tolerance(self) -> Tolerance:
        return Tolerance(rel=self.tolerance_rel, abs=self.tolerance_abs)

    def runner(self) -> ProgramRunner:
        limits = ExecutionLimits(
            timeout_ms=self.timeout_ms,
            max_output_bytes=self.max_output_bytes,
        )
        if self.runner_command:
            return ProgramRunner(
                list(self.runner_command), limits, self.keep_artifacts
            )
        return ProgramRunner(limits=limits, keep_artifacts=self.keep_artifacts)


@dataclass(frozen=True)
class EvaluationConfig:
    """Settings for splitting and evaluation.

    Attributes:
        train_fraction: Share of each source dataset used for training.
        seed: Seed of the stratified split.
        complexity_weight: The weight lambda of the library size in F.
        workers: Tasks evaluated at the same time.
    """

    train_fraction: float = 0.7
    seed: int = 0
    complexity_weight: float = 0.0
    workers: int = 4

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.complexity_weight < 0:
            raise ValueError("complexity_weight must be non-negative")


# SolveConfig nests these two; they are read from their own sections.
SOLVE_SHARED = ("tolerance", "retrieval")


@dataclass(frozen=True)
class EngineConfig:
    """The complete engine configuration."""

    provider: ProviderConfig = field(default_factory=ProviderConfig)
    execution: ExecutionConfig = field(default_factory=ExecutionConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    solve: SolveConfig = field(default_factory=SolveConfig)
    learning: LearningConfig = field(default_factory=LearningConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def solve_config(self) -> SolveConfig:
        """The solve settings with retrieval and tolerance filled in."""
        return replace(
            self.solve,
            tolerance=self.execution.tolerance(),
            retrieval=self.retrieval,
        )

    def to_dict(self) -> dict[str, Any]:
        data = dataclasses.asdict(self)
        for key in SOLVE_SHARED:
            data["solve"].pop(key)
        return data

    def fingerprint(self) -> str:
        """Stable SHA-256 of the configuration."""
        text = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _build(default: Any, data: dict[str, Any], where: str) -> Any:
    """Return ``default`` with the values of ``data`` applied."""
    if not isinstance(data, dict):
        raise ValueError(f"Section '{where}' must be a mapping")
    names = {i.name for i in dataclasses.fields(default)}
    if isinstance(default, SolveConfig):
        names -= set(SOLVE_SHARED)
    changes = {}
    for key, value in data.items():
        if key not in names:
            raise ValueError(f"Unknown setting '{where}.{key}'")
        current = getattr(default, key)
        if dataclasses.is_dataclass(current):
            value = _build(current, value, f"{where}.{key}")
        elif isinstance(current, tuple) and isinstance(value, list):
            value = tuple(value)
        changes[key] = value
    try:
        return replace(default, **changes)
    except (TypeError, ValueError) as error:
        raise ValueError(f"Invalid settings in '{where}': {error}") from error


def config_from_dict(data: dict[str, Any] | None) -> EngineConfig:
    """Build a configuration from nested plain values.

    Raises:
        ValueError: If a key does not name a setting.
    """
    if not data:
        return EngineConfig()
    return _build(EngineConfig(), data, "config")


def load_config(path: str | pathlib.Path | None = None) -> EngineConfig:
    """Read a YAML configuration file.

    A missing file or an empty document gives the defaults.

    Raises:
        ValueError: If the file is not valid YAML, is not a mapping or
            holds an unknown key.
    """
    if path is None:
        return EngineConfig()
    path = pathlib.Path(path)
    if not path.is_file():
        LOGGER.warning("Config file %s not found, using defaults", path)
        return EngineConfig()
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as error:
        LOGGER.error("Error parsing config file %s", path)
        raise ValueError(f"Invalid YAML in {path}") from error
    if data is None:
        LOGGER.info("Config file %s is empty, using defaults", path)
        return EngineConfig()
    if not isinstance(data, dict):
        LOGGER.error("Config file %s does not hold a mapping", path)
        raise ValueError(f"Config file {path} does not hold a mapping")
    return config_from_dict(data)
