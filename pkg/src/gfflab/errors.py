"""Exception types raised across gfflab."""


class GFFError(Exception):
    """Base class for all gfflab errors."""


class InvalidLatticeError(GFFError, ValueError):
    """A graph or triangulation violates a structural invariant."""


class InvalidInputError(GFFError, ValueError):
    """Arguments are inconsistent with the object they refer to."""


class ResourceError(GFFError):
    """A requested size exceeds a configured cap."""


class NumericalError(GFFError, ArithmeticError):
    """A factorization or solve failed, or a form is not positive definite."""


class UnsupportedGraphError(GFFError, ValueError):
    """The requested method is not defined for this graph (e.g. signed weights)."""
