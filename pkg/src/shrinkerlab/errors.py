"""Exception hierarchy shared by all modules."""


class ShrinkerLabError(Exception):
    """Base class for errors raised by shrinkerlab."""


class DomainError(ShrinkerLabError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class FitError(ShrinkerLabError):
    """Local polynomial fit failed (rank-deficient neighborhood)."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class PreconditionError(ShrinkerLabError):
    """Input violates a numerical precondition; carries the measured value."""

    def __init__(self, message, measured=None):
        super().__init__(message)
        self.measured = measured


class TruncationError(ShrinkerLabError):
    """Gaussian tail beyond the truncation radius is not negligible."""

    def __init__(self, message, suggested_rho_max=None):
        super().__init__(message)
        self.suggested_rho_max = suggested_rho_max


class ConvergenceError(ShrinkerLabError):
    """An iterative procedure did not converge."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class ValidationError(ShrinkerLabError):
    """Scenario configuration failed validation."""
