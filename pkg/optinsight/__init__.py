"""optinsight learns and evolves a solver-verified library of
optimization-modeling insights."""
from .version import __version__

__all__ = ["__version__"]
