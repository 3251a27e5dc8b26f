"""Exception hierarchy shared by every module."""


class GeometryError(Exception):
    """Base class for all errors raised by :mod:`isospectral`."""


class ValidationError(GeometryError, ValueError):
    """An input matrix violates the invariants of its declared type."""


class ConditioningError(GeometryError, ArithmeticError):
    """A linear solve is too ill-conditioned to be trusted."""


class UnsupportedRankError(GeometryError, ValueError):
    """The operation needs an invertible density operator."""


class DomainError(GeometryError, ValueError):
    """Inputs are individually valid but incompatible, e.g. not isospectral."""


class IntegrationDriftError(GeometryError, ArithmeticError):
    """An integrated trajectory drifted off its manifold; retry with more steps."""
