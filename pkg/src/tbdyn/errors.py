"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "DomainError",
    "SingularityError",
    "IntegrationError",
    "StepOverflowError",
    "GridTooCoarseError",
    "InternalConsistencyError",
    "EnsembleError",
    "ConfigError",
]


class DomainError(ValueError):
    """An input lies outside an operation's stated domain."""


class SingularityError(DomainError):
    """A closed-form expression is evaluated at a removable-pole parameter set."""


class IntegrationError(RuntimeError):
    """Adaptive integration failed; carries the partial trajectory.

    Attributes
    ----------
    trajectory : Trajectory
        The accepted steps up to the failure point.
    """

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepOverflowError(RuntimeError):
    """An Euler-Maruyama step produced a non-finite state; carries the partial path."""

    def __init__(self, message: str, path=None):
        super().__init__(message)
        self.path = path


class GridTooCoarseError(RuntimeError):
    """A scan grid cell hides structure (odd equilibrium-count change)."""


class InternalConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


class EnsembleError(RuntimeError):
    """Too many path failures inside a Monte Carlo ensemble."""


class ConfigError(ValueError):
    """A scenario document is malformed or violates the schema."""
