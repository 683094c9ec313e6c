"""fraclab: a 1-D numerical laboratory for the operator

    (-Delta)^t + (-Delta)_Omega^{s/2} b (-Delta)_Omega^{s/2} + q,   0 < s < t < 1,

posed on a bounded interval Omega with exterior Dirichlet data.

The package assembles the nonlocal bilinear forms on a uniform P1 mesh,
solves the exterior-value problem, samples Dirichlet-to-Neumann data on an
exterior observation set, runs Runge-approximation demonstrations for the
regional (censored) fractional Laplacian, and recovers the coefficients
(b, q) from noiseless synthetic measurements.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    FracLabError,
    GuardError,
    IllPosedRegimeError,
    ObservationError,
    QuadratureError,
    SingularInputError,
    SupportViolationError,
)
from .kernels import frac_constant, getoor_constant, m_function, tail_potential, verify_symbol

__all__ = [
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "FracLabError",
    "GuardError",
    "IllPosedRegimeError",
    "ObservationError",
    "QuadratureError",
    "SingularInputError",
    "SupportViolationError",
    "frac_constant",
    "getoor_constant",
    "m_function",
    "tail_potential",
    "verify_symbol",
]
