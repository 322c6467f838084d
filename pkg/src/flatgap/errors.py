"""Exception types raised across the package."""


class DomainError(ValueError):
    """A point or parameter lies outside the region where an operation is defined."""


class ResolutionError(ValueError):
    """A grid or sample set is too coarse for the requested operation."""


class SolverError(RuntimeError):
    """A linear solve failed or returned an unusable residual."""


class FitError(ValueError):
    """Exponent fit is degenerate."""
