"""Gradient estimates for the insulated conductivity problem between partially flat inclusions.

Modules: ``geometry`` (profiles, flattening map, coefficients), ``harmonics`` (mode
bookkeeping), ``reduced_ode`` (averaged radial equation), ``neck_solver`` (mode PDE),
``blowup_lab`` (gap sweeps and exponent fits) and ``cli``.
"""
from .errors import DomainError, FitError, ResolutionError, SolverError
from .geometry import ProblemConfig, Profile

__version__ = "0.1.0"

__all__ = ["ProblemConfig", "Profile", "DomainError", "FitError", "ResolutionError", "SolverError"]
