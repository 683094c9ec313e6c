"""Exception hierarchy shared by all fraclab modules."""


class FracLabError(Exception):
    """Base class for all fraclab errors."""


class DomainError(FracLabError):
    """A scalar parameter violates its admissible range (e.g. order not in (0,1))."""


class SingularInputError(FracLabError):
    """Evaluation requested at a point where the integrand is genuinely singular."""


class SupportViolationError(FracLabError):
    """A coefficient or datum is nonzero where a compact-support hypothesis forbids it."""


class QuadratureError(FracLabError):
    """Graded refinement failed to stabilize an integral to the requested tolerance."""


class GuardError(FracLabError):
    """The interior operator block is numerically singular (eigenvalue condition failed)."""


class IllPosedRegimeError(FracLabError):
    """Regional Dirichlet problem requested for an order where it is not coercive."""


class ObservationError(FracLabError):
    """An observation point violates the exterior-distance requirement."""


class DivergenceError(FracLabError):
    """The recovery iteration increased the misfit repeatedly and was aborted."""


class ConfigError(FracLabError):
    """A run configuration violates a documented invariant."""
