"""Exceptions raised by the library."""
from typing import Optional


class JsdBoundError(Exception):
    """Base class for all errors raised by jsdbound."""


class DomainError(JsdBoundError, ValueError):
    """An argument lies outside the domain of the function."""


class ConvergenceError(JsdBoundError, RuntimeError):
    """The root finder could not bracket or converge."""


class ShapeError(JsdBoundError, ValueError):
    """Array shapes do not match the network or the batch."""


class ConfigError(JsdBoundError):
    """The run configuration is missing or invalid."""


class EmptyWindowError(JsdBoundError, ValueError):
    """A summary window contains no estimates."""


class DivergenceError(JsdBoundError, RuntimeError):
    """Training produced a non-finite loss or parameter."""

    def __init__(self, iteration: int, reason: Optional[str] = None):
        self.iteration = iteration
        self.reason = reason or 'non-finite value'
        super().__init__(f'Diverged at iteration {iteration}: {self.reason}')
