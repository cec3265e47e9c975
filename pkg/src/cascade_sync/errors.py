"""Exception types shared across the package."""


class CascadeSyncError(Exception):
    """Base class for all package errors."""


class NonPositiveLambda(CascadeSyncError, ValueError):
    """A tick rate is zero, negative, or not finite."""


class NegativeBeta(CascadeSyncError, ValueError):
    """A message rate is negative or not finite."""


class LengthMismatch(CascadeSyncError, ValueError):
    """Sequence lengths disagree with the processor count."""


class DegenerateLevels(CascadeSyncError, ValueError):
    """Group decomposition requires pairwise distinct tick rates."""


class EmptyRollback(CascadeSyncError, ValueError):
    """Requested rollback outcomes for a message that cannot roll back."""


class IndexOutOfRange(CascadeSyncError, ValueError):
    """Sender or barrier index outside 1..N-1."""


class NonPositiveHorizon(CascadeSyncError, ValueError):
    """Simulation horizon must be positive."""


class ProbabilityUnderflow(CascadeSyncError, ArithmeticError):
    """A transition probability underflowed double precision (< 1e-300)."""


class BadQuadrant(CascadeSyncError, ValueError):
    """Tangency point left the quadrant required by the contour geometry."""


class AssumptionViolated(CascadeSyncError, ValueError):
    """The rate assumption required by the requested check does not hold."""


class BadRadii(CascadeSyncError, ValueError):
    """Drift radii must satisfy 0 < inner < outer."""


class UndefinedAtCorner(CascadeSyncError, ValueError):
    """Gauge gradient requested on a ray through a contour corner."""


class ParamMismatch(CascadeSyncError, ValueError):
    """Coupled models must share processor count and tick rates."""


class ConfigError(CascadeSyncError, ValueError):
    """Experiment configuration failed to parse or validate."""
