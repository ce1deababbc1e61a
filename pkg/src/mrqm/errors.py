"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, singular/numerical failures with 3, violated physical
preconditions with 4.
"""


class MrqmError(Exception):
    """Base class for all package errors."""


class ConfigError(MrqmError):
    """Invalid user input: parameter documents, CLI configs, bad enums."""


class SingularResponseError(MrqmError):
    """A transfer function was evaluated at (or too close to) a pole.

    Raised instead of returning infinities so that sweeps and optimizers
    can record a structured failure for the offending grid point.
    """


class PreconditionError(MrqmError):
    """A documented physical precondition of an operation is violated."""


class IntegrationError(MrqmError):
    """Adaptive integration failed (step-size underflow)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
