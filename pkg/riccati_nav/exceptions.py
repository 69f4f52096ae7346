"""Exceptions raised by the Riccati navigation package."""

from __future__ import annotations

from collections.abc import Sequence


class RiccatiNavError(Exception):
    """Base class for all package errors."""


class NormalizationError(RiccatiNavError, ValueError):
    """A vector that must have unit norm does not."""


class DegenerateInputError(RiccatiNavError, ValueError):
    """Input is singular, reflected or collinear where that is not allowed."""


class BearingUndefinedError(DegenerateInputError):
    """Vehicle sits on the landmark, so the bearing has no direction."""


class HorizonError(RiccatiNavError, ValueError):
    """Time query or window inconsistent with the sampled horizon."""


class NumericalFailure(RiccatiNavError, ArithmeticError):
    """The Riccati matrix or state estimate became non-finite or lost positive definiteness."""

    def __init__(self, message: str, *, t: float | None = None, min_eig: float | None = None) -> None:
        super().__init__(message)
        self.t = t
        self.min_eig = min_eig


class ScenarioError(RiccatiNavError, ValueError):
    """Scenario document could not be parsed or validated."""

    def __init__(self, message: str, *, path: Sequence[str | int] = ()) -> None:
        self.path = [str(part) for part in path]
        where = ".".join(self.path)
        super().__init__(f"{message} @ {where}" if where else message)
        self.reason = message

    @property
    def field(self) -> str:
        """Dotted path of the offending field."""
        return ".".join(self.path)


class ExportError(RiccatiNavError, ValueError):
    """An exported time-series file does not match the column schema."""
