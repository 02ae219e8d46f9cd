"""Exception hierarchy shared by all lpboot modules."""


class LpBootError(Exception):
    """Base class for every error raised by lpboot."""


class InvalidSpecError(LpBootError, ValueError):
    """A model or experiment specification failed validation."""


class InvalidInputError(LpBootError, ValueError):
    """Data handed to an operation violates its preconditions."""


class InsufficientSampleError(InvalidInputError):
    """The series is too short for the requested lags and horizons."""


class SingularDesignError(LpBootError, ArithmeticError):
    """A regression design matrix is (numerically) rank deficient."""

    def __init__(self, message, condition_number=float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class DegenerateExtensionError(LpBootError):
    """The auxiliary regression behind the MA extension could not be estimated."""


class InfeasibleBandError(LpBootError, ValueError):
    """No stable AR coefficient set was found inside the persistence band."""


class NumericalCovarianceError(LpBootError, ArithmeticError):
    """A covariance matrix is not positive semi-definite."""


class PipelineError(LpBootError):
    """A bootstrap pipeline could not produce a result."""


class IncompleteGridError(LpBootError):
    """A Monte Carlo table is missing cells of its design grid."""
