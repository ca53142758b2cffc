"""Discretized nonlocal integral operators at phase-interface fronts.

The package builds the linearized interaction operators that govern the
stability of a diffuse interface with small interaction range, and verifies
their spectral estimates (gap sizes, eigenvector shapes, lower bounds) on
desk-scale grids.
"""

from .errors import ConfigError, FrontspectraError, NumericalError, VerificationFailure

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "FrontspectraError",
    "NumericalError",
    "VerificationFailure",
    "__version__",
]
