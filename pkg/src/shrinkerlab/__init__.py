"""Numerical lab for self-shrinkers of mean curvature flow."""

from .errors import (ConvergenceError, DomainError, FitError, PreconditionError,
                     ShrinkerLabError, TruncationError, ValidationError)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "DomainError", "FitError", "PreconditionError", "ShrinkerLabError",
    "TruncationError", "ValidationError", "__version__",
]
