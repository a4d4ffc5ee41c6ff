"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): bad input
(:class:`ValidationError`, exit code 2) and numerical failure
(:class:`NumericalError`, exit code 3).
"""


class LZError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(LZError, ValueError):
    """Input violates a documented precondition."""


class DomainError(ValidationError):
    """Argument outside the supported evaluation region."""


class SchemaError(ValidationError):
    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = "/".join(str(p) for p in self.path) or "<root>"
        super().__init__(f"{where}: {message}")


class PhysicalConstraintError(ValidationError):
    """Parameters that cannot describe a physical qubit (e.g. T2 > 2*T1)."""


class InsufficientDataError(ValidationError):
    pass


class SingularCalibrationError(ValidationError):
    pass


class NumericalError(LZError, ArithmeticError):
    """A numerical procedure failed to reach its own tolerance."""


class ConvergenceError(NumericalError):
    pass


class SingularDenominatorError(NumericalError):
    pass


class StepSizeError(NumericalError):
    pass


class NotFoundError(NumericalError):
    pass
