"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
numerical failures exit 2, verification failures exit 3.
"""


class FrontspectraError(Exception):
    """Base class for all package errors."""


class ConfigError(FrontspectraError):
    """Invalid configuration or violated model hypothesis (exit code 1)."""


class NumericalError(FrontspectraError):
    """A solver or assembly failed numerically (exit code 2)."""


class VerificationFailure(FrontspectraError):
    """A verification check ran to completion and failed (exit code 3)."""
