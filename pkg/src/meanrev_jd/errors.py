"""Exception hierarchy.

Input problems derive from ``ValueError`` and numerical failures from
``ArithmeticError`` so callers can catch them with the builtin types. The
CLI maps the first family to exit status 2 and the second to exit status 3.
"""

from __future__ import annotations


class MeanRevJDError(Exception):
    """Base class for all package errors."""


class InputError(MeanRevJDError, ValueError):
    """Invalid user input: bad parameters, malformed data, wrong variant."""


class DomainError(InputError):
    """Argument outside the domain of a function (pole, inadmissible theta)."""


class NumericalError(MeanRevJDError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    Attributes:
        error_estimate: Best error estimate reached before giving up, if any.
    """

    def __init__(self, message: str, error_estimate: float | None = None):
        super().__init__(message)
        self.error_estimate = error_estimate


class NoRootError(NumericalError):
    """No sign change of a residual inside the admissible domain."""

    def __init__(self, message: str, scanned: tuple[float, float] | None = None):
        super().__init__(message)
        self.scanned = scanned


class GridError(NumericalError):
    """A discretization grid is too small or too coarse for the requested accuracy.

    Attributes:
        suggestion: Suggested replacement settings, e.g. ``{"n": 16384}``.
    """

    def __init__(self, message: str, suggestion: dict | None = None):
        super().__init__(message)
        self.suggestion = suggestion or {}
