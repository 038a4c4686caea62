"""Tyler's M-estimator via the trace-normalized fixed-point iteration"""

import logging
import warnings

import numpy as np

from tylershape.config import settings
from tylershape.exceptions import (
    ConvergenceWarning,
    DegenerateInputError,
    DegenerateIterateError,
    ExistenceError,
)
from tylershape.schemas.datasets import DataSet, ShapeMatrix
from tylershape.schemas.estimators import SolverPath, TmeSolution
from tylershape.utils.linalg import (
    cholesky_lower,
    condition_estimate,
    normalize_trace,
    quadratic_forms,
    weighted_scatter,
)

logger = logging.getLogger(__name__)

KENT_HINT = (
    "Kent's existence condition (no proper d-dimensional subspace may hold "
    "n*d/p or more of the samples) is probably violated"
)


def factor_iterate(sigma: np.ndarray, iteration: int) -> np.ndarray:
    try:
        chol = cholesky_lower(sigma)
    except np.linalg.LinAlgError as e:
        raise DegenerateIterateError(
            f"iterate {iteration} is not positive definite; {KENT_HINT}"
        ) from e
    cond = condition_estimate(chol)
    if cond > settings.condition_limit:
        raise DegenerateIterateError(
            f"iterate {iteration} has condition estimate {cond:.3e}; {KENT_HINT}"
        )
    return chol


def _tyler_map(samples: np.ndarray, chol: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One trace-p normalized Tyler update; also returns the quadratic forms"""
    n, p = samples.shape
    q = quadratic_forms(chol, samples)
    if not np.all(np.isfinite(q)) or np.any(q <= 0):
        raise DegenerateIterateError("non-finite or non-positive quadratic form")
    update = (p / n) * weighted_scatter(samples, 1.0 / q)
    return normalize_trace(update, p), q


def tyler_fixed_point(
    data: DataSet,
    tol: float | None = None,
    max_iter: int | None = None,
) -> TmeSolution:
    """Iterate Sigma_{k+1} = p S(Sigma_k) / tr S(Sigma_k) from Sigma_1 = I.

    Stops when the Frobenius step between consecutive (trace-p) iterates drops
    below tol or after max_iter updates.
    """
    tol = settings.tol if tol is None else tol
    max_iter = settings.max_iter if max_iter is None else max_iter
    x = data.samples
    n, p = x.shape
    if n <= p:
        raise ExistenceError(f"Tyler's M-estimator needs n > p, got n={n}, p={p}")

    sigma = np.eye(p)
    step = np.inf
    iterations = 0
    while iterations < max_iter:
        chol = factor_iterate(sigma, iterations)
        sigma_next, _ = _tyler_map(x, chol)
        step = float(np.linalg.norm(sigma_next - sigma, "fro"))
        sigma = sigma_next
        iterations += 1
        if step < tol:
            break

    converged = step < tol
    if not converged:
        warnings.warn(
            f"Tyler iteration hit max_iter={max_iter} with step {step:.3e}",
            ConvergenceWarning,
            stacklevel=2,
        )
        logger.warning(f"TME did not converge: n={n}, p={p}, final step {step:.3e}")

    chol = factor_iterate(sigma, iterations)
    image, q = _tyler_map(x, chol)
    residual = float(np.linalg.norm(image - sigma, "fro") / np.linalg.norm(sigma, "fro"))

    weights = 1.0 / q
    weights /= weights.sum()

    logger.debug(f"TME solved: n={n}, p={p}, iterations={iterations}, step={step:.3e}")
    return TmeSolution(
        estimate=ShapeMatrix.normalized(sigma),
        raw=sigma,
        weights=weights,
        iterations=iterations,
        final_step=step,
        residual=residual,
        converged=converged,
        path=SolverPath.DENSE,
    )


def tme_weights(solution: TmeSolution, data: DataSet) -> np.ndarray:
    """w_i proportional to 1 / (x_i^T Sigma^{-1} x_i), normalized to sum to one"""
    if not solution.converged:
        logger.warning("Extracting weights from a non-converged TME solution")
    chol = cholesky_lower(solution.estimate.entries)
    q = quadratic_forms(chol, data.samples)
    if not np.all(np.isfinite(q)) or np.any(q <= 0):
        raise DegenerateInputError("non-finite quadratic form while extracting weights")
    w = 1.0 / q
    return w / w.sum()
