"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the range where a formula is defined."""


class ConditionError(ValueError):
    """A hypothesis inequality required by a bound does not hold.

    ``inequality`` names the failed condition (``"assu"``, ``"exisineq"``,
    ``"exisineq2"`` or ``"en"``) so callers can report it.
    """

    def __init__(self, inequality: str, message: str):
        super().__init__(f"condition '{inequality}' violated: {message}")
        self.inequality = inequality


class RootNotFoundError(RuntimeError):
    """No sign change could be bracketed for a monotone root search."""
