"""Exception types raised across the package."""


class SearchRiskError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(SearchRiskError, ValueError):
    """An input violates a documented precondition (non-finite, bad shape, bad scale)."""


class ConvergenceError(SearchRiskError, RuntimeError):
    """An iterative solver exhausted its iteration budget.

    Carries the final stationarity residual so callers can judge how close
    the solve got.
    """

    def __init__(self, message, kkt_residual=None, sweeps=None):
        super().__init__(message)
        self.kkt_residual = kkt_residual
        self.sweeps = sweeps


class RankDeficiencyError(SearchRiskError):
    """The selected columns are numerically rank deficient."""

    def __init__(self, message, support=None):
        super().__init__(message)
        self.support = support


class EnumerationCapError(SearchRiskError):
    """Exhaustive subset enumeration would exceed the configured cap."""


class UnsupportedRegimeError(SearchRiskError):
    """Operation requested outside its supported problem regime (e.g. p >= n)."""
