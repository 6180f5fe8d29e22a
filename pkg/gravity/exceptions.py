"""
Exceptions raised by the gravity app.
"""


class BouncerError(Exception):
    """Base class for computational failures."""


class QuadratureError(BouncerError):
    """The overlap quadrature cannot resolve the requested integrand."""


class RootBracketError(BouncerError):
    """An Airy-zero bracket holds no sign change."""


class PropagationError(BouncerError):
    """Diagnostics exceeded their tolerance during propagation."""

    def __init__(self, message, tau=None, trace_drift=None, min_eigenvalue=None):
        super().__init__(message)
        self.tau = tau
        self.trace_drift = trace_drift
        self.min_eigenvalue = min_eigenvalue


class RecordFormatError(BouncerError):
    """A measurement file row failed validation."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)
        self.line = line


class FitError(BouncerError):
    """The constrained coefficient fit is not defined for the given data."""
