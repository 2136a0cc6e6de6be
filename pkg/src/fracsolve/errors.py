"""Exception hierarchy shared by all solvers."""


class FracError(Exception):
    """Base class for errors raised by fracsolve."""


class InputValidationError(FracError, ValueError):
    """Malformed input data (grid, values, configuration)."""


class DomainError(FracError, ValueError):
    """Argument outside the domain where an operation is defined."""


class PreconditionError(FracError, ValueError):
    """A documented precondition on the data does not hold."""


class ConsistencyError(FracError, ValueError):
    """Data admits no solution in the continuous class."""


class EvaluationError(FracError, ArithmeticError):
    """A user-supplied function produced NaN or failed to evaluate."""


class SingularityError(FracError, ArithmeticError):
    """A denominator collapsed below the admissible floor."""


class AccuracyError(FracError, ArithmeticError):
    """A truncated series did not reach its accuracy target."""


class DivergenceError(FracError, RuntimeError):
    """Fixed-point iteration blew up; ``report`` carries the trace."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class HypothesisWarning(UserWarning):
    """Asserted hypothesis constants are contradicted by sampled data."""
