"""Exception hierarchy shared by all modules."""


class FracvarError(Exception):
    """Base class for errors raised by fracvar."""


class DomainError(FracvarError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class GridError(FracvarError, ValueError):
    """Paths live on incompatible or malformed grids."""


class LevelError(GridError):
    """Requested partition level is not available on the path."""


class EmbeddingError(FracvarError, ArithmeticError):
    """The circulant embedding has a significantly negative eigenvalue."""


class DivergenceError(FracvarError, ArithmeticError):
    """The numerical solution became non-finite."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class PreconditionError(FracvarError, ValueError):
    """Inputs violate a structural precondition (e.g. non-commuting matrices)."""


class DegeneratePathError(FracvarError, ArithmeticError):
    """A quadratic variation used as a denominator is zero."""


class SingularDesignError(FracvarError, ArithmeticError):
    """The least-squares design matrix does not have full column rank."""

    def __init__(self, kappa, message=None):
        self.kappa = kappa
        super().__init__(message or f"design matrix is rank deficient (kappa={kappa})")


class ConfigError(FracvarError, ValueError):
    """An experiment configuration is invalid."""


class HurstRangeWarning(RuntimeWarning):
    """Estimated Hurst index falls outside (0, 1)."""
