"""Exception hierarchy.

Validation errors (bad inputs, malformed files) derive from ``ValueError``;
numerical failures derive from ``ArithmeticError``. The CLI maps the first
family to exit code 2 and the second to exit code 1.
"""


class BmcertError(Exception):
    pass


class ValidationError(BmcertError, ValueError):
    pass


class NumericalError(BmcertError, ArithmeticError):
    pass


class NonFinite(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotOnManifold(ValidationError):
    pass


class NotTangent(ValidationError):
    pass


class BadSignVector(ValidationError):
    pass


class BadShape(ValidationError):
    pass


class BadDelta(ValidationError):
    pass


class BadAlpha(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class SymmetryViolation(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


class Misaligned(ValidationError):
    pass


class OptimalPoint(ValidationError):
    """The configuration is already a global minimizer; no certificate exists."""


class NotCritical(NumericalError):
    pass


class DegenerateRow(NumericalError):
    pass


class DegenerateT(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class ChainViolation(NumericalError):
    pass
