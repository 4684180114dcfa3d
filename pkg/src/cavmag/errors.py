"""Exception hierarchy shared by the cavmag modules."""


class CavmagError(Exception):
    """Base class for all library errors."""


class DomainError(CavmagError, ValueError):
    """An input lies outside the domain of a physical formula."""


class SingularityError(CavmagError, ArithmeticError):
    """A denominator vanished (within the configured epsilon)."""


class ConsistencyError(CavmagError):
    """Derived quantities disagree with the inputs they were built from."""


class InstabilityError(CavmagError):
    """A stable fixed point was required but the drift matrix is not stable."""


class StepUnderflowError(CavmagError):
    """The adaptive integrator shrank its step below the allowed floor."""


class DivergenceError(CavmagError):
    """A trajectory left the overflow guard."""


class NonConvergenceError(CavmagError):
    """A trajectory did not settle before the time cap."""


class SweepSpecError(CavmagError, ValueError):
    """A sweep specification violates its invariants."""
