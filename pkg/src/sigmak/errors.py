"""Exception hierarchy shared by all modules."""


class SigmaKError(Exception):
    """Base class for library errors."""


class DomainError(SigmaKError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(SigmaKError, ValueError):
    """Malformed input (shape, symmetry, non-finite entries)."""


class CapacityError(SigmaKError, ValueError):
    """The request is too large for a brute-force routine."""


class RangeError(SigmaKError, IndexError):
    """A stencil or evaluation point falls outside the available data."""


class NumericError(SigmaKError, ArithmeticError):
    """An iterative method failed to converge."""


class SingularityError(NumericError):
    """The state reached the boundary of the positive cone."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t
