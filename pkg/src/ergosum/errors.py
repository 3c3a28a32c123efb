"""Shared exception types."""


class ErgosumError(Exception):
    pass


class ConfigError(ErgosumError):
    """Invalid experiment configuration."""


class BudgetError(ErgosumError):
    """A configured resource limit (orbit length, matching count, cover size) was exceeded."""


class InsufficientStatisticsError(ErgosumError):
    """Too few expected events for the requested estimate."""


class QuadratureError(ErgosumError):
    """Adaptive quadrature did not reach the requested relative accuracy."""


class FitUnstableError(ErgosumError):
    """Scatter across the fitting grid is too large for a meaningful constant fit."""
