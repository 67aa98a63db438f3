"""
Error types raised by the quadratic-form period toolkit.

Every error derives from QpzError, which is a ValueError, so callers that
only care about "bad input" can keep catching ValueError.
"""


class QpzError(ValueError):
    """Base class for all domain errors; the CLI maps these to exit code 1."""


class CongruenceViolation(QpzError):
    """rho^2 is not congruent to D modulo 4N."""


class SquareDiscriminant(QpzError):
    """The operation needs a nonsquare discriminant."""


class BadWeight(QpzError):
    """The weight parameter k is outside the supported range."""


class EvenWeight(QpzError):
    """An odd k was required but an even k was given."""


class LevelMismatch(QpzError):
    """The level N does not divide the leading coefficient of a form."""


class NotUnimodular(QpzError):
    """A matrix does not have determinant 1."""


class NotFundamental(QpzError):
    """D is not a fundamental discriminant."""


class BadCongruence(QpzError):
    """D is not congruent to 1 modulo 4N."""


class HypothesisUnknown(QpzError):
    """A plus-space vanishing hypothesis is not covered by the built-in table."""


class PrecisionUnreachable(QpzError):
    """A numerical routine cannot reach the requested precision."""


class NonPositiveT(QpzError):
    """A point i*t with t <= 0 was requested."""


class SeriesNonConvergent(QpzError):
    """The truncated form series did not settle before the bound cap."""


class QuadratureNonConvergent(QpzError):
    """Adaptive quadrature stalled above tolerance."""


class IncompleteVector(QpzError):
    """A period vector is missing coset entries."""


class BadVariant(QpzError):
    """Unknown cusp form variant name."""
