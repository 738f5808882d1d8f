"""Exception hierarchy.

The CLI maps ``ValidationError`` to exit status 1, ``NumericalError`` to 2
and ``CheckFailure`` to 3.
"""


class MuskatLabError(Exception):
    pass


class ValidationError(MuskatLabError, ValueError):
    pass


class NumericalError(MuskatLabError, ArithmeticError):
    pass


class CheckFailure(MuskatLabError):
    pass


class DegenerateArgumentError(NumericalError):
    """Kernel evaluated where cosh(x2) - cos(x1) vanishes."""


class DegenerateTangentError(NumericalError):
    """|f'|^2 below the tangent floor."""


class DiffeomorphismError(NumericalError):
    """The reparameterization x(alpha, t) is not monotone."""


class InsufficientSmoothnessError(NumericalError):
    pass


class ArcChordError(NumericalError):
    pass


class BlowUpError(NumericalError):
    pass


class StripExceededError(NumericalError):
    """Complex evaluation requested beyond the estimated analyticity strip."""


class InsufficientModesError(NumericalError):
    pass


class SignChangeError(NumericalError):
    pass


class SupportViolationError(ValidationError):
    pass
