"""Exceptions raised by the estimators and the benchmark harness"""


class ShapeEstimationError(Exception):
    """Base class for estimation failures a benchmark run records and survives"""


class ExistenceError(ShapeEstimationError, ValueError):
    """The requested estimator does not exist for this sample size / regularization"""


class DegenerateIterateError(ShapeEstimationError, RuntimeError):
    """A fixed-point iterate became numerically singular.

    For Tyler's estimator this usually means Kent's condition fails: some proper
    subspace holds too many of the samples.
    """


class NonPositiveDefiniteError(ShapeEstimationError, ValueError):
    """A shape matrix has no Cholesky factor"""


class DegenerateInputError(ShapeEstimationError, ValueError):
    """Input data cannot support the requested computation"""


class ScreeningFailureError(ShapeEstimationError, RuntimeError):
    """Outlier screening kept too few samples to re-estimate"""


class ConvergenceWarning(UserWarning):
    """A fixed-point iteration stopped at its iteration cap"""
