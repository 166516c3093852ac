"""Semantic exception types shared across the package."""


class RaschDesignError(Exception):
    """Base class for all domain errors raised by this package."""


class InputFormatError(RaschDesignError, ValueError):
    """A parameter or design file violates the documented JSON schema."""


class ModelSizeError(RaschDesignError, ValueError):
    """Model too large: operations enumerate {0,1}^k and reject k > 20."""


class SingularInformation(RaschDesignError):
    """Information matrix has no Cholesky factorization (support does not span)."""


class NotSaturated(RaschDesignError):
    """Design is not saturated with uniform weights on exactly p points."""


class SingularSupport(RaschDesignError):
    """Regression vectors of the support do not form an invertible matrix."""


class NoBracket(RaschDesignError):
    """Predicate takes the same value at both ends of the bracketing interval."""


class InfeasibleStart(RaschDesignError):
    """Newton start point is not strictly feasible (matrix not positive definite)."""


class NotInAffineHull(RaschDesignError):
    """Point does not lie in the affine hull of the polytope vertices."""


class MonotonicityError(RaschDesignError):
    """log det decreased during an ascent step that must be monotone."""


class NumericalCheckError(RaschDesignError):
    """An internal numerical self-check failed (inconsistent sensitivities)."""
