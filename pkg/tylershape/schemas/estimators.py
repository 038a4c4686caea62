"""Schemas for solver configuration, solutions and estimates"""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from tylershape.config import settings
from tylershape.schemas.datasets import ShapeMatrix


class SolverPath(str, Enum):
    DENSE = "dense"
    SUBSPACE_AUTO = "subspace-auto"


class RegConfig(BaseModel):
    """Parameters of the regularized Tyler iteration"""
    alpha: float = Field(default_factory=lambda: settings.default_alpha, gt=0.0)
    tol: float = Field(default_factory=lambda: settings.tol, gt=0.0)
    max_iter: int = Field(default_factory=lambda: settings.max_iter, ge=1)
    path: SolverPath = Field(default=SolverPath.SUBSPACE_AUTO)
    force: bool = Field(default=False)

    @property
    def shrink(self) -> float:
        """alpha / (1 + alpha), the weight of the identity"""
        return self.alpha / (1.0 + self.alpha)


class ThresholdSchedule(BaseModel):
    """t = multiplier * sqrt(ln p / n), unless an explicit level is given"""
    multiplier: float = Field(default_factory=lambda: settings.threshold_multiplier, gt=0.0)
    explicit_t: float | None = Field(default=None, ge=0.0)


class TmeSolution(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    estimate: ShapeMatrix  # trace-p normalized
    raw: np.ndarray  # the fixed point itself; tr(raw^{-1}) = p when regularized
    weights: np.ndarray
    iterations: int
    final_step: float
    residual: float
    converged: bool
    alpha: float | None = Field(default=None)
    guaranteed: bool = Field(default=True)
    path: SolverPath = Field(default=SolverPath.DENSE)

    @property
    def regularized(self) -> bool:
        return self.alpha is not None


class ConvergenceTrace(BaseModel):
    """e_k = ||Sigma_k - Sigma_final|| (spectral) along the iteration"""
    errors: list[float]

    @computed_field  # type: ignore[prop-decorator]
    @property
    def ratios(self) -> list[float]:
        return [
            self.errors[k + 1] / self.errors[k]
            for k in range(len(self.errors) - 1)
            if self.errors[k] > 0
        ]


class ShapeEstimate(BaseModel):
    """Output of one named estimator; thresholded matrices need not be PSD"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    estimator: str
    matrix: np.ndarray
    threshold: float | None = Field(default=None)
    unthresholded: np.ndarray | None = Field(default=None)
    solution: TmeSolution | None = Field(default=None)

    @property
    def iterations(self) -> int | None:
        return None if self.solution is None else self.solution.iterations
