"""Exception hierarchy shared by every isec module."""

from __future__ import annotations


class IsecError(ValueError):
    """Base class for all errors raised by isec."""


class InstanceError(IsecError):
    """Malformed instance: bad matrix, unknown point or label, broken partition."""


class MetricError(InstanceError):
    """A distance matrix violates a metric axiom.

    ``indices`` holds the first violating index tuple (a pair or a triple).
    """

    def __init__(self, message: str, indices: tuple[int, ...] = ()):
        super().__init__(message)
        self.indices = indices


class DomainError(IsecError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(IsecError):
    """A documented precondition does not hold for the given inputs."""


class ConfigurationError(IsecError):
    """Required configuration (e.g. a measure on Y) is missing."""


class InfeasibleError(IsecError):
    """No finite constant satisfies the request; ``witness`` names the blocking pair."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness
