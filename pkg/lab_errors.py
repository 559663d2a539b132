"""
lab_errors.py

Exceptions raised across the lab. Every error derives from LabError so the CLI
can report lab failures separately from programming errors.
"""

from typing import Any, List, Optional


class LabError(Exception):
    """Base class for all lab errors."""


class DomainError(LabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PreconditionError(LabError, ValueError):
    """Input violates a documented precondition (non-real, non-Hermitian, ...)."""


class ConfigError(LabError, ValueError):
    """Experiment config failed schema or range validation."""

    def __init__(self, problems: List[str], source: Optional[str] = None):
        self.problems = list(problems)
        self.source = source
        where = f" in {source}" if source else ""
        super().__init__(f"{len(self.problems)} config problem(s){where}: " + "; ".join(self.problems))


class QuadratureError(LabError, RuntimeError):
    """A moment integral did not reach its tolerance."""


class QuadratureRefused(QuadratureError):
    """Quadrature is refused for the requested power; use the asymptotic."""


class AssemblyError(LabError, RuntimeError):
    """A matrix could not be assembled from the given symbol."""


class DimensionMismatchError(LabError, ValueError):
    """Blocks or operands of incompatible shapes."""


class SpectralComputationError(LabError, RuntimeError):
    """An eigen/singular value computation failed; carries the best iterate."""

    def __init__(self, message: str, best_iterate: Any = None):
        super().__init__(message)
        self.best_iterate = best_iterate


class WindowError(LabError, ValueError):
    """Estimator window is empty or degenerate."""


class BudgetError(LabError, RuntimeError):
    """Requested size exceeds a dense or bisection budget."""
