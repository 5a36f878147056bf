"""
Exception hierarchy for the swarm sacrifice simulators.

Every error raised on purpose by the package derives from SwarmError so the
CLI can report it with a single handler and a nonzero exit status.
"""

from typing import Optional


class SwarmError(Exception):
    """Base class for all package errors."""


class DomainError(SwarmError, ValueError):
    """A formula was evaluated outside its mathematical domain."""


class ConfigError(SwarmError, ValueError):
    """Invalid parameters or experiment configuration."""

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.field = field
        self.line = line
        self.column = column
        location = ""
        if field:
            location = f" [{field}]"
        if line is not None:
            location += f" (line {line}, column {column})"
        super().__init__(f"{message}{location}")


class TransitionError(SwarmError):
    """A mode change outside the allowed transition graph."""


class IntegrationError(SwarmError):
    """The ODE integrator produced a non-finite state."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} at step {step}")


class PreconditionError(SwarmError):
    """An operation was called with inputs that violate its precondition."""


class ConsistencyError(SwarmError):
    """An internal invariant failed; indicates a bug, not bad input."""


class InputError(SwarmError):
    """Malformed or inconsistent input data (trajectory files, robot ids)."""
