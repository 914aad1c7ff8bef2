"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a function."""


class PoleError(DomainError):
    """Function evaluated exactly at a pole."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature exhausted its panel budget before reaching tolerance.

    ``estimate`` holds the last integral estimate and ``error`` the
    corresponding error estimate, so callers can decide whether it is usable.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf"), rank=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.rank = rank


class TableTooShortError(ValueError):
    """An order-statistic table does not reach the requested rank."""


class DegenerateColumnError(ValueError):
    """A regressor column has zero sum of squares."""


class OrthogonalityError(ValueError):
    """Design matrix fails the orthonormality check and no override was given."""


class DatasetFormatError(ValueError):
    """Malformed dataset file."""
