"""Exception types shared across the package."""


class MfaError(Exception):
    """Base class for all package errors."""


class DomainError(MfaError, ValueError):
    """A point or parameter pair lies outside the admissible domain.

    Raised for points outside a vertex interval and for (q, t) pairs with
    ``q*u + t <= theta`` where the pressure is infinite.
    """


class AdmissibilityError(MfaError, ValueError):
    """A word violates the incidence matrix."""


class BudgetError(MfaError, RuntimeError):
    """A word enumeration exceeded its declared budget."""


class ConvergenceError(MfaError, RuntimeError):
    """An iterative method failed to converge within its budget."""


class UnknownVerdict(MfaError):
    """A diagnostic cannot be decided from the available metadata."""


class ParameterError(MfaError, ValueError):
    """A system or family was constructed from invalid parameters."""


class StructureError(MfaError, ValueError):
    """The operation needs structure the system does not have (e.g. a full shift)."""
