"""Error metrics and sparsity-class diagnostics"""

import math
from collections.abc import Sequence

import numpy as np
from scipy import linalg

from tylershape.schemas.datasets import ShapeMatrix
from tylershape.schemas.metrics import SparsityStats

ASYMMETRY_TOL = 1e-8


def _as_array(a: np.ndarray | ShapeMatrix) -> np.ndarray:
    return a.entries if isinstance(a, ShapeMatrix) else np.asarray(a, dtype=float)


def spectral_norm(a: np.ndarray | ShapeMatrix) -> float:
    """Largest absolute eigenvalue of a symmetric matrix"""
    a = _as_array(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(float(np.max(np.abs(a))), 1.0) if a.size else 1.0
    if np.max(np.abs(a - a.T)) > ASYMMETRY_TOL * scale:
        raise ValueError("spectral_norm expects a symmetric matrix")
    eigs = linalg.eigvalsh(0.5 * (a + a.T), check_finite=False)
    return float(max(abs(eigs[0]), abs(eigs[-1])))


def relative_spectral_error(
    est: np.ndarray | ShapeMatrix, truth: np.ndarray | ShapeMatrix
) -> float:
    """||est - truth|| / ||truth|| in spectral norm"""
    est, truth = _as_array(est), _as_array(truth)
    if est.shape != truth.shape:
        raise ValueError(f"dimension mismatch: {est.shape} vs {truth.shape}")
    return spectral_norm(est - truth) / spectral_norm(truth)


def lre(relative_errors: Sequence[float] | np.ndarray) -> float:
    """Natural log of the mean relative error over realizations"""
    errors = np.asarray(relative_errors, dtype=float)
    if errors.size == 0:
        raise ValueError("lre needs at least one error")
    mean = float(errors.mean())
    if mean <= 0:
        raise ValueError(f"lre needs a positive mean error, got {mean}")
    return math.log(mean)


def sparsity_stats(a: np.ndarray | ShapeMatrix, q: float) -> SparsityStats:
    """max_i sum_j |a_ij|^q (diagonal included, 0^0 = 0) and max diagonal"""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    a = _as_array(a)
    mag = np.abs(a)
    powered = np.zeros_like(mag)
    nonzero = mag != 0
    powered[nonzero] = mag[nonzero] ** q
    return SparsityStats(
        q=q,
        max_row_lq=float(powered.sum(axis=1).max()),
        max_diag=float(np.max(np.diag(a))),
    )
