"""Schemas for benchmark experiment configuration and results"""

from enum import Enum
from typing import Any, Literal

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from tylershape.config import settings
from tylershape.schemas.datasets import OutlierModel, ULaw, XiMode

ROW_COLUMNS = [
    "experiment",
    "estimator",
    "n",
    "p",
    "u_law",
    "alpha",
    "realization",
    "seed",
    "rel_spec_error",
    "iterations",
    "wall_time_s",
    "status",
]

EXTRA_COLUMNS = {
    "estimator-grid": [],
    "alpha-sweep": ["guaranteed"],
    "alpha-vs-n": ["guaranteed"],
    "outlier-screening": ["epsilon", "outlier_model"],
}


class ExperimentKind(str, Enum):
    ESTIMATOR_GRID = "estimator-grid"
    ALPHA_SWEEP = "alpha-sweep"
    ALPHA_VS_N = "alpha-vs-n"
    OUTLIER_SCREENING = "outlier-screening"


class GridPoint(BaseModel):
    n: int = Field(ge=4)
    p: int = Field(ge=2)


class ExperimentConfig(BaseModel):
    """One benchmark run; JSON config files use these field names"""
    experiment: ExperimentKind
    p_over_n: list[float] = Field(default_factory=lambda: [0.5])
    n_values: list[int] = Field(default_factory=lambda: [100, 200])
    points: list[GridPoint] | None = Field(default=None)
    p_fixed: int | None = Field(default=None, ge=2)
    u_laws: list[ULaw] = Field(default_factory=lambda: [ULaw.CONSTANT])
    alpha: float | list[float] | Literal["auto"] = Field(
        default_factory=lambda: settings.default_alpha
    )
    R_target: float = Field(default_factory=lambda: settings.convergence_ratio, gt=0.0, lt=1.0)
    threshold_multiplier: float = Field(
        default_factory=lambda: settings.threshold_multiplier, gt=0.0
    )
    realizations: int = Field(default_factory=lambda: settings.realizations, ge=1)
    master_seed: int = Field(default_factory=lambda: settings.master_seed, ge=0)
    tol: float = Field(default_factory=lambda: settings.tol, gt=0.0)
    max_iter: int = Field(default_factory=lambda: settings.max_iter, ge=1)
    output_dir: str = Field(default_factory=lambda: settings.output_dir)

    epsilons: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2])
    outlier_models: list[OutlierModel] = Field(default_factory=lambda: [OutlierModel.UNIFORM])
    level_set_ratio: float = Field(
        default_factory=lambda: settings.level_set_ratio, gt=0.0, lt=1.0
    )
    rho: float = Field(default=0.7, gt=-1.0, lt=1.0)
    xi_mode: XiMode = Field(default=XiMode.STANDARD_GAUSSIAN)
    symmetrize: bool = Field(default=False)
    force_alpha: bool = Field(default=False)
    include_tme: bool = Field(default=False)
    record_timing: bool = Field(default=False)
    dump_matrices: bool = Field(default=False)
    dump_datasets: bool = Field(default=False)
    workers: int = Field(default_factory=lambda: settings.workers, ge=1)

    @field_validator("n_values")
    @classmethod
    def validate_n_values(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("n_values must not be empty")
        if min(v) < 4:
            raise ValueError("all n must be at least 4")
        return v

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v: Any) -> Any:
        values = v if isinstance(v, list) else [v]
        if v != "auto" and (not values or any(a <= 0 for a in values)):
            raise ValueError("alpha values must be positive")
        return v

    @field_validator("epsilons")
    @classmethod
    def validate_epsilons(cls, v: list[float]) -> list[float]:
        if any(not 0.0 <= e < 1.0 for e in v):
            raise ValueError("epsilons must lie in [0, 1)")
        return v

    @model_validator(mode="after")
    def check_grid(self) -> "ExperimentConfig":
        if self.experiment is ExperimentKind.ALPHA_VS_N and self.p_fixed is None:
            raise ValueError("alpha-vs-n needs p_fixed")
        self.grid_points()  # raises on p < 2
        return self

    def grid_points(self) -> list[GridPoint]:
        """(n, p) pairs in run order"""
        if self.points:
            return list(self.points)
        if self.experiment is ExperimentKind.ALPHA_VS_N:
            return [GridPoint(n=n, p=self.p_fixed) for n in self.n_values]
        points = []
        for n in self.n_values:
            for ratio in self.p_over_n:
                p = int(round(ratio * n))
                if p < 2:
                    raise ValueError(f"ratio {ratio} at n={n} resolves to p={p}, below 2")
                points.append(GridPoint(n=n, p=p))
        return points

    def alpha_values(self) -> list[float | str]:
        if self.alpha == "auto":
            return ["auto"]
        return list(self.alpha) if isinstance(self.alpha, list) else [self.alpha]


class ExperimentResult(BaseModel):
    """Per-realization rows plus the per-grid-point LRE summary"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    experiment: ExperimentKind
    rows: pd.DataFrame
    summary: pd.DataFrame
    reports: list[dict[str, Any]] = Field(default_factory=list)
    files: dict[str, str] = Field(default_factory=dict)
