"""Exception and warning classes raised by :mod:`picardo`."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class DataFormatError(ValueError):
    """An input file or array could not be interpreted as a signal matrix."""


class NumericalError(ArithmeticError):
    """Base class for numerical failures (rank deficiency, singular matrices...)."""


class RankDeficiencyError(NumericalError):
    """A covariance matrix has a non-positive eigenvalue."""


class DegeneracyError(NumericalError):
    """A matrix is singular or too far from the orthogonal group."""


class NumericOverflowError(NumericalError):
    """A sample average evaluated to a non-finite number."""


class WhiteningWarning(UserWarning):
    """Some covariance eigenvalues were floored during whitening."""


class FixedPointWarning(UserWarning):
    """The symmetric part of the FastICA matrix is not positive definite."""
