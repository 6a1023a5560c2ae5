"""Exception hierarchy shared by every hquat module."""


class QuatError(Exception):
    """Base class for all library errors."""


class DomainError(QuatError, ValueError):
    """Input lies outside the domain of the operation (zero inverse, pole, ...)."""


class UnsupportedShape(QuatError):
    """The symbolic engine has no exact rule for this word shape."""


class ConvergenceError(QuatError):
    """Refinement budget exhausted before the requested tolerance was met."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class PoleOnPath(DomainError):
    """A singularity of the integrand lies on (or too close to) the path."""


class BranchDegeneracy(QuatError):
    """Logarithm derivative is singular at the requested point and direction."""
