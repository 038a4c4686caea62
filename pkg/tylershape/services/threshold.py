"""Hard thresholding and the thresholded shape estimators"""

import logging
import math

import numpy as np

from tylershape.exceptions import DegenerateInputError
from tylershape.schemas.datasets import DataSet, ShapeMatrix
from tylershape.schemas.estimators import (
    RegConfig,
    ShapeEstimate,
    ThresholdSchedule,
    TmeSolution,
)
from tylershape.services.regtme import reg_tyler
from tylershape.services.tme import tyler_fixed_point
from tylershape.utils.linalg import symmetrize, weighted_scatter

logger = logging.getLogger(__name__)


def hard_threshold(a: np.ndarray, t: float) -> np.ndarray:
    """Keep a_ij iff |a_ij| > t; diagonal included, ties zeroed"""
    if t < 0:
        raise ValueError(f"threshold must be non-negative, got {t}")
    a = np.asarray(a, dtype=float)
    return np.where(np.abs(a) > t, a, 0.0)


def resolve_threshold(p: float, n: int, schedule: ThresholdSchedule | None = None) -> float:
    schedule = schedule or ThresholdSchedule()
    if schedule.explicit_t is not None:
        return schedule.explicit_t
    if p < 2 or n < 1:
        raise ValueError(f"threshold rule needs p >= 2 and n >= 1, got p={p}, n={n}")
    return schedule.multiplier * math.sqrt(math.log(p) / n)


def estimate_shape_tme(
    data: DataSet,
    tol: float | None = None,
    max_iter: int | None = None,
    schedule: ThresholdSchedule | None = None,
) -> ShapeEstimate:
    """th-TME: threshold the trace-p Tyler estimate"""
    solution = tyler_fixed_point(data, tol=tol, max_iter=max_iter)
    t = resolve_threshold(data.p, data.n, schedule)
    shape = solution.estimate.entries
    return ShapeEstimate(
        estimator="th-TME",
        matrix=hard_threshold(shape, t),
        threshold=t,
        unthresholded=shape,
        solution=solution,
    )


def regtme_shape(solution: TmeSolution) -> np.ndarray:
    """p (Sigma(alpha) - a/(1+a) I) / tr(...), the RegTME estimator"""
    if solution.alpha is None:
        raise ValueError("regtme_shape needs a regularized solution")
    p = solution.raw.shape[0]
    shrink = solution.alpha / (1.0 + solution.alpha)
    centered = solution.raw - shrink * np.eye(p)
    tr = float(np.trace(centered))
    if tr <= 1e-12 * p:
        raise DegenerateInputError(
            "regularized TME equals its identity component; nothing left to rescale"
        )
    return symmetrize(p * centered / tr)


def estimate_shape_regtme(
    data: DataSet,
    reg_config: RegConfig | None = None,
    schedule: ThresholdSchedule | None = None,
) -> ShapeEstimate:
    """th-RegTME: remove the identity component, rescale to trace p, threshold"""
    solution = reg_tyler(data, reg_config)
    shape = regtme_shape(solution)
    t = resolve_threshold(data.p, data.n, schedule)
    return ShapeEstimate(
        estimator="th-RegTME",
        matrix=hard_threshold(shape, t),
        threshold=t,
        unthresholded=shape,
        solution=solution,
    )


def scaled_sample_cov(data: DataSet) -> ShapeMatrix:
    """(1/n) sum x_i x_i^T rescaled to trace p; the location is taken as known (zero)"""
    x = data.samples
    cov = weighted_scatter(x, np.full(data.n, 1.0 / data.n))
    if np.trace(cov) <= 0:
        raise DegenerateInputError("sample covariance has zero trace")
    return ShapeMatrix.normalized(cov)


def thresholded_sample_cov(
    data: DataSet, schedule: ThresholdSchedule | None = None
) -> ShapeEstimate:
    shape = scaled_sample_cov(data).entries
    t = resolve_threshold(data.p, data.n, schedule)
    return ShapeEstimate(
        estimator="th-SampCov",
        matrix=hard_threshold(shape, t),
        threshold=t,
        unthresholded=shape,
    )


class ShapeEstimationService:
    """The thresholded estimators under one solver configuration and threshold schedule"""

    def __init__(
        self,
        reg_config: RegConfig | None = None,
        schedule: ThresholdSchedule | None = None,
    ):
        self.reg_config = reg_config or RegConfig()
        self.schedule = schedule or ThresholdSchedule()

    def sample_cov(self, data: DataSet) -> ShapeEstimate:
        return thresholded_sample_cov(data, self.schedule)

    def tme(self, data: DataSet) -> ShapeEstimate:
        """th-TME; only the tolerance and iteration cap of the solver config apply"""
        return estimate_shape_tme(
            data, self.reg_config.tol, self.reg_config.max_iter, self.schedule
        )

    def regtme(self, data: DataSet) -> ShapeEstimate:
        return estimate_shape_regtme(data, self.reg_config, self.schedule)
