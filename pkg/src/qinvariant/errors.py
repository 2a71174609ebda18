"""Exception hierarchy.

Numerical failures derive from :class:`NumericalFailure` so the CLI can map
them to a single exit code.
"""


class QInvariantError(Exception):
    pass


class DomainError(QInvariantError, ValueError):
    pass


class ConfigError(QInvariantError, ValueError):
    pass


class ValidationFailure(QInvariantError):
    pass


class NumericalFailure(QInvariantError, ArithmeticError):
    pass


class NonConvergentJumpIntegral(NumericalFailure):
    pass


class BracketFailure(NumericalFailure):
    pass


class SeriesError(NumericalFailure):
    pass


class ZeroDenominator(SeriesError):
    pass


class TruncationFailure(SeriesError):
    pass


class ProductDivergence(SeriesError):
    pass


class PoleParameter(DomainError):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class NonFinite(NumericalFailure):
    pass


class BranchViolation(DomainError):
    pass


class UnsupportedExponent(QInvariantError, TypeError):
    pass


class GridExhausted(NumericalFailure):
    pass


class InsufficientHits(NumericalFailure):
    pass


class MeaninglessQuery(DomainError):
    pass
