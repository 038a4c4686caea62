"""Schemas for weight-based outlier screening"""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class KernelDensity(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float = Field(gt=0.0)


class ScreeningReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    weights: np.ndarray
    density: KernelDensity
    w_in: float
    sigma_in: float = Field(ge=0.0)
    kept: list[int]
    bounds: tuple[float, float]
    n_outliers: int | None = Field(default=None)
    outliers_kept: int | None = Field(default=None)

    @model_validator(mode="after")
    def check_consistency(self) -> "ScreeningReport":
        lo, hi = self.bounds
        if not lo <= self.w_in <= hi:
            raise ValueError(f"bounds {self.bounds} do not contain w_in={self.w_in}")
        if self.kept != sorted(set(self.kept)):
            raise ValueError("kept indices must be sorted and unique")
        return self

    @property
    def kept_fraction(self) -> float:
        return len(self.kept) / len(self.weights)

    def to_json_dict(self) -> dict[str, Any]:
        """Weights, bounds and kept indices; the density curve is left out"""
        return {
            "weights": [float(w) for w in self.weights],
            "w_in": self.w_in,
            "sigma_in": self.sigma_in,
            "bounds": list(self.bounds),
            "kept": self.kept,
            "n_outliers": self.n_outliers,
            "outliers_kept": self.outliers_kept,
        }
