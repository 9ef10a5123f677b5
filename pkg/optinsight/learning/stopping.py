"""Definitions for stopping training."""
from __future__ import annotations

import logging
import pathlib
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from optinsight.learning.training import Learner


LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


class StopCondition(ABC):
    """Base class for stopping conditions."""

    reason: str = "stopped"  # Recorded in the training report.

    @abstractmethod
    def stop(self, learner: Learner) -> bool:
        """Check the stopping condition."""

    def __call__(self, learner: Learner) -> bool:
        """Check the stopping condition."""
        return self.stop(learner)


class SoftExit(StopCondition):
    """Stop if we detect an `EXIT` file in the run directory."""

    reason = "soft exit"

    def stop(self, learner: Learner) -> bool:
        """Check if we are to do a soft exit."""
        exe_dir = getattr(learner, "exe_dir", None) or pathlib.Path()
        exit_file = pathlib.Path(exe_dir) / "EXIT"
        if exit_file.is_file():
            LOGGER.info("Found exit file - will exit at the next iteration.")
            return True
        return False


class MaxIterations(StopCondition):
    """Stop when the iteration budget is used up."""

    reason = "max_iterations"

    def stop(self, learner: Learner) -> bool:
        return learner.iteration >= learner.config.max_iterations


class Plateau(StopCondition):
    """Stop when training accuracy no longer improves.

    The improvement between consecutive iterations must stay below
    ``eps`` for ``window`` iterations in a row.
    """

    reason = "plateau"

    def __init__(self, eps: float = 0.01, window: int = 2):
        if window < 1:
            raise ValueError("The plateau window must be at least 1")
        self.eps = eps
        self.window = window

    def stop(self, learner: Learner) -> bool:
        accuracies = learner.accuracies
        if len(accuracies) < self.window + 1:
            return False
        recent = accuracies[-(self.window + 1) :]
        gains = [b - a for a, b in zip(recent, recent[1:])]
        return all(gain < self.eps for gain in gains)
