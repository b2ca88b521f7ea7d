"""Exception types shared across the package.

Each carries a CLI exit code so that scenario runners can map failures
onto the documented process status without string matching.
"""


class SqfockError(Exception):
    exit_code = 1


class InvalidDimension(SqfockError, ValueError):
    exit_code = 2


class DimensionMismatch(SqfockError, ValueError):
    exit_code = 2


class InvalidState(SqfockError, ValueError):
    exit_code = 2


class UnstableDrive(SqfockError, ValueError):
    """The two-phonon drive has no bounded squeezed frame (|Omega_p| >= |delta_a|)."""

    exit_code = 2


class ConfigError(SqfockError, ValueError):
    exit_code = 2


class NonconvergentIntegration(SqfockError, RuntimeError):
    exit_code = 3


class TruncationTooSmall(SqfockError, ValueError):
    """Fock truncation cannot hold the requested squeezed states."""

    exit_code = 4

    def __init__(self, message, required_dim=None):
        super().__init__(message)
        self.required_dim = required_dim
