"""Dense linear-algebra kernels shared by the fixed-point solvers"""

import numpy as np
from scipy import linalg


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises numpy.linalg.LinAlgError if a is not PD"""
    return linalg.cholesky(a, lower=True, check_finite=False)


def quadratic_forms(chol: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """x_i^T A^{-1} x_i for every row x_i, given the lower Cholesky factor of A.

    Uses one triangular solve against all samples; A^{-1} is never formed.
    """
    z = linalg.solve_triangular(chol, samples.T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", z, z)


def condition_estimate(chol: np.ndarray) -> float:
    """Cheap lower bound on cond(A) from the diagonal of its Cholesky factor"""
    d = np.abs(np.diag(chol))
    return float((d.max() / d.min()) ** 2) if d.min() > 0 else float("inf")


def weighted_scatter(samples: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_i w_i x_i x_i^T with a fixed reduction order"""
    return symmetrize((samples.T * weights) @ samples)


def normalize_trace(a: np.ndarray, target: float) -> np.ndarray:
    return target * a / np.trace(a)
