"""Schemas for shape matrices, elliptical models and datasets"""

from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class XiMode(str, Enum):
    """Law of the direction vector xi"""
    SPHERE_UNIFORM = "sphere-uniform"
    STANDARD_GAUSSIAN = "standard-gaussian"


class ULaw(str, Enum):
    """Law of the scalar multiplier u"""
    CONSTANT = "constant"
    LAPLACE = "laplace"
    CAUCHY = "cauchy"


class OutlierModel(str, Enum):
    """Spectrum of the outlier shape matrix before rotation"""
    UNIFORM = "uniform"  # d_ii iid U[1, 5]
    SPIKED = "spiked"  # diag(p, p/2, 1, ..., 1)


class ShapeMatrix(BaseModel):
    """Symmetric PSD p x p matrix normalized to trace p"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    entries: np.ndarray

    @field_validator("entries")
    @classmethod
    def validate_entries(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise ValueError(f"shape matrix must be square, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("shape matrix has non-finite entries")
        return v

    @model_validator(mode="after")
    def check_invariants(self) -> "ShapeMatrix":
        a = self.entries
        p = a.shape[0]
        if np.max(np.abs(a - a.T)) > 1e-12:
            raise ValueError("shape matrix is not symmetric")
        smallest = np.linalg.eigvalsh(a)[0]
        if smallest < -1e-10 * max(np.max(np.abs(a)), 1.0):
            raise ValueError(f"shape matrix is not PSD (smallest eigenvalue {smallest:.3e})")
        if abs(np.trace(a) - p) > 1e-8 * p:
            raise ValueError(f"shape matrix trace {np.trace(a):.12g} differs from p={p}")
        return self

    @classmethod
    def normalized(cls, a: np.ndarray) -> "ShapeMatrix":
        """Symmetrize and rescale an arbitrary PSD matrix to trace p"""
        a = np.asarray(a, dtype=float)
        a = 0.5 * (a + a.T)
        return cls(entries=a.shape[0] * a / np.trace(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def max_diag(self) -> float:
        return float(np.max(np.diag(self.entries)))

    @property
    def spectral_norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.entries))))


class EllipticalModel(BaseModel):
    """x = mu + u * S^{1/2} xi with u and xi drawn independently per sample"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    shape: ShapeMatrix
    xi_mode: XiMode = Field(default=XiMode.STANDARD_GAUSSIAN)
    u_law: ULaw = Field(default=ULaw.CONSTANT)
    location: np.ndarray | None = Field(default=None)

    @model_validator(mode="after")
    def check_location(self) -> "EllipticalModel":
        if self.location is not None:
            loc = np.asarray(self.location, dtype=float)
            if loc.shape != (self.shape.dim,):
                raise ValueError(
                    f"location must have length {self.shape.dim}, got shape {loc.shape}"
                )
            self.location = loc
        return self

    def describe(self) -> dict[str, Any]:
        return {
            "p": self.shape.dim,
            "xi_mode": self.xi_mode.value,
            "u_law": self.u_law.value,
            "has_location": self.location is not None,
        }


class DataSet(BaseModel):
    """n samples in R^p (rows), optional outlier labels and generation record"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    samples: np.ndarray
    labels: np.ndarray | None = Field(default=None)
    meta: dict[str, Any] = Field(default_factory=dict)

    @field_validator("samples")
    @classmethod
    def validate_samples(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"samples must be a non-empty n x p array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("samples contain non-finite values")
        zero_rows = np.flatnonzero(~np.any(v != 0.0, axis=1))
        if zero_rows.size:
            raise ValueError(
                f"samples contain the zero vector at rows {zero_rows[:5].tolist()}"
            )
        return v

    @model_validator(mode="after")
    def check_labels(self) -> "DataSet":
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=bool)
            if labels.shape != (self.n,):
                raise ValueError(f"labels must have length {self.n}")
            self.labels = labels
        return self

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def p(self) -> int:
        return self.samples.shape[1]

    @property
    def gamma(self) -> float:
        return self.p / self.n

    def subset(self, indices: np.ndarray | list[int]) -> "DataSet":
        idx = np.asarray(indices, dtype=int)
        labels = None if self.labels is None else self.labels[idx]
        return DataSet(samples=self.samples[idx], labels=labels, meta=dict(self.meta))

    def scaled(self, factors: np.ndarray) -> "DataSet":
        """Per-sample rescaling x_i -> t_i x_i"""
        factors = np.asarray(factors, dtype=float)
        return DataSet(
            samples=self.samples * factors[:, None], labels=self.labels, meta=dict(self.meta)
        )


class ContaminationSpec(BaseModel):
    """epsilon-contamination: round(eps n) outliers from a randomly rotated shape"""

    epsilon: float = Field(ge=0.0, lt=1.0)
    inlier: EllipticalModel
    outlier_d_spec: OutlierModel = Field(default=OutlierModel.UNIFORM)

    def outlier_count(self, n: int) -> int:
        # half-up rounding; Python's round() would send 2.5 to 2
        return int(np.floor(self.epsilon * n + 0.5))
