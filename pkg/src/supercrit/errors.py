"""Exception hierarchy; the CLI maps each family onto an exit code."""


class SupercritError(Exception):
    exit_code = 2


class SpecParseError(SupercritError, ValueError):
    exit_code = 1


class ConstraintError(SupercritError, ValueError):
    exit_code = 1


class NumericalError(SupercritError, ArithmeticError):
    """Quadrature, root bracketing, limit detection or step-size failure."""

    exit_code = 2


class QuadratureError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class LimitDetectionError(NumericalError):
    pass


class IntegrationError(NumericalError):
    pass


class RegimeError(SupercritError):
    exit_code = 3


class PreconditionError(SupercritError):
    exit_code = 4
