"""Exception types shared across the package."""


class QlskitError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(QlskitError, ValueError):
    """Operands have incompatible shapes."""


class InvalidParameter(QlskitError, ValueError):
    """A scalar or configuration argument is out of its admissible range."""


class RankDeficient(QlskitError, ArithmeticError):
    """A triangular factor has a negligible diagonal entry."""


class SingularDiagonal(QlskitError, ArithmeticError):
    """A triangular solve hit an exactly zero diagonal entry."""


class NoConvergence(QlskitError, ArithmeticError):
    """An iterative kernel exhausted its sweep budget."""


class NotSymmetric(QlskitError, ValueError):
    """A matrix required to be symmetric is not, beyond roundoff."""


class Breakdown(QlskitError, ArithmeticError):
    """A factorization or recurrence hit a zero pivot or denominator."""


class DenominatorVanishes(QlskitError, ArithmeticError):
    """A rank-one update denominator is zero or negative."""


class NoRealRoot(QlskitError, ArithmeticError):
    """The perturbation scalar equation has no real solution."""


class ZeroVector(QlskitError, ValueError):
    """A direction vector required to be nonzero is zero."""


class ConfigError(QlskitError, ValueError):
    """An experiment configuration file is malformed."""


class MissingConfiguration(QlskitError, ValueError):
    """Records required for a report are absent."""


class EmptyInput(QlskitError, ValueError):
    """An operation received an empty collection."""
