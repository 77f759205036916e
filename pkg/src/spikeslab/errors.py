"""Exception types shared across the package."""


class SpikeslabError(Exception):
    """Base class for all package errors."""


class NonFiniteInputError(SpikeslabError):
    """Input arrays contain NaN or infinite entries."""


class ConstantColumnError(SpikeslabError):
    """A design column has zero variance and cannot be standardized."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"column {column} is constant (zero variance)")


class DimensionMismatchError(SpikeslabError):
    """Array shapes are inconsistent with each other."""


class NotStandardizedError(SpikeslabError):
    """Operation requires a standardized dataset."""


class DomainError(SpikeslabError):
    """Scalar argument outside its mathematical domain."""


class SingularDesignError(SpikeslabError):
    """X'X is singular (or numerically so) where an inverse is required."""


class InsufficientDofError(SpikeslabError):
    """Too few observations for the requested degrees-of-freedom adjustment."""


class DegenerateFitError(SpikeslabError):
    """Fit saturated: as many (or more) nonzero coefficients as observations."""


class DidNotConvergeError(SpikeslabError):
    """Iterative routine hit its iteration cap before converging.

    When a partial result is available it is attached as ``fit``.
    """

    def __init__(self, message: str, fit=None):
        self.fit = fit
        super().__init__(message)
