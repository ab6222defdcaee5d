"""Exception hierarchy shared by all modules."""


class CoercivityError(Exception):
    """Base class for every error raised by this package."""


class InputError(CoercivityError, ValueError):
    """Malformed input (non-unit vectors, wrong dimensions, bad config)."""


class DomainError(CoercivityError, ValueError):
    """Parameter outside the admissible range of a formula."""


class DegenerateCollisionError(CoercivityError, ValueError):
    """Collision with v == v_* (no relative velocity, angle undefined)."""


class SingularityError(CoercivityError, ValueError):
    """Evaluation requested exactly at a non-integrable singular point."""


class AccuracyError(CoercivityError, RuntimeError):
    """A quadrature error estimate exceeded its tolerance."""


class IntegrandError(CoercivityError, FloatingPointError):
    """Integrand produced NaN or Inf at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConstructionError(CoercivityError, RuntimeError):
    """A quadrature grid failed its exactness self-test."""


class AssemblyError(CoercivityError, RuntimeError):
    """Galerkin matrix failed a structural check (e.g. symmetry)."""


class ConditioningError(CoercivityError, RuntimeError):
    """Mass matrix is not positive definite on the invariant complement."""


class UnsupportedModelError(CoercivityError, NotImplementedError):
    """Operation is not defined for the requested kernel model."""


class FitError(CoercivityError, ValueError):
    """Not enough spread in the data for a power-law fit."""
