"""Exception hierarchy. Each family carries the CLI exit status it maps to."""

from __future__ import annotations


class SensikitError(Exception):
    exit_code = 1


class DomainError(SensikitError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 5


class NumericalFailure(SensikitError, ArithmeticError):
    exit_code = 8


class InfeasiblePlanError(SensikitError):
    """No sampling plan satisfies the requested budget.

    ``min_gamma`` holds the smallest confidence level achievable with the
    given sample size, so callers can report a remedy.
    """

    exit_code = 3

    def __init__(self, message: str, min_gamma: float | None = None):
        super().__init__(message)
        self.min_gamma = min_gamma


class DegenerateSensitivityError(SensikitError):
    exit_code = 4


class TargetEvaluationError(SensikitError):
    exit_code = 6

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class NonDeterministicTargetError(TargetEvaluationError):
    pass


class InputOutputError(SensikitError):
    """A file could not be read, written, or parsed."""

    exit_code = 7
