"""Error types shared by the numerical modules.

Each class maps onto one CLI exit code, see ``hypermt.cli``.
"""
from __future__ import annotations


class HyperMTError(Exception):
    """Base class for all package errors."""


class DomainError(HyperMTError, ValueError):
    """An argument lies outside the domain of the operation."""


class RangeError(DomainError):
    """A requested point lies outside tabulated / integrated coverage."""


class NumericalError(HyperMTError, ArithmeticError):
    """Quadrature or integration failed to reach the requested accuracy."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class QualityError(NumericalError):
    """A fit was computed but its residual is above the accepted level."""


class BracketError(HyperMTError):
    """Shooting could not bracket an admissible solution."""

    def __init__(self, message: str, lo_outcome=None, hi_outcome=None):
        super().__init__(message)
        self.lo_outcome = lo_outcome
        self.hi_outcome = hi_outcome


class AmbiguityError(BracketError):
    """The shooting map is not monotone on the search interval."""

    def __init__(self, message: str, roots=()):
        super().__init__(message)
        self.roots = list(roots)


class DegeneracyError(HyperMTError):
    """The two linear decay rates coincide (lambda = 1/4)."""
