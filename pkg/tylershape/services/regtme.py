"""Regularized Tyler's M-estimator, its alpha rule and convergence diagnostics"""

import logging
import math
import warnings
from collections.abc import Iterator

import numpy as np
from scipy import linalg

from tylershape.config import settings
from tylershape.exceptions import (
    ConvergenceWarning,
    DegenerateInputError,
    DegenerateIterateError,
    ExistenceError,
)
from tylershape.schemas.datasets import DataSet, ShapeMatrix
from tylershape.schemas.estimators import (
    ConvergenceTrace,
    RegConfig,
    SolverPath,
    TmeSolution,
)
from tylershape.services.metrics import spectral_norm
from tylershape.services.tme import factor_iterate
from tylershape.utils.linalg import cholesky_lower, quadratic_forms, symmetrize, weighted_scatter

logger = logging.getLogger(__name__)

ALPHA_FLOOR = 1e-6


def c_of_x(data: DataSet) -> float:
    """(p/n) ||sum_i x_i x_i^T / ||x_i||^2||, always at least p/n"""
    x = data.samples
    n, p = x.shape
    unit = x / np.linalg.norm(x, axis=1, keepdims=True)
    # the smaller Gram matrix has the same nonzero spectrum
    gram = unit @ unit.T if n < p else unit.T @ unit
    return (p / n) * spectral_norm(symmetrize(gram))


def cx_theoretical_bound(spectral_norm_s: float, p: int, n: int) -> float:
    """High-probability bound 2 ||S_p|| (1 + 2 sqrt(p/n))^2 on c_of_x"""
    if spectral_norm_s <= 0 or p <= 0 or n <= 0:
        raise ValueError("arguments must be positive")
    return 2.0 * spectral_norm_s * (1.0 + 2.0 * math.sqrt(p / n)) ** 2


def recommend_alpha(c: float, r: float, safety: float | None = None) -> float:
    """Smallest alpha (with margin) for which the iteration contracts at ratio r.

    The rate guarantee needs alpha > max((3 + 1/r) C - 1, 0); the floor keeps
    the inequality strict even when the bracket is zero.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"target ratio must lie in (0, 1), got {r}")
    safety = settings.alpha_safety if safety is None else safety
    if safety < 0:
        raise ValueError("safety must be non-negative")
    threshold = max((3.0 + 1.0 / r) * c - 1.0, 0.0)
    return (1.0 + safety) * threshold + ALPHA_FLOOR


def predicted_iterations(r: float, accuracy: float) -> int:
    """Iterations the rate guarantee needs to reach the given accuracy"""
    if not 0.0 < r < 1.0 or not 0.0 < accuracy < 1.0:
        raise ValueError("r and accuracy must lie in (0, 1)")
    return math.ceil(math.log(1.0 / accuracy) / math.log(1.0 / r))


def existence_bound(p: int, n: int) -> float:
    return max(0.0, p / n - 1.0)


class _Problem:
    """The regularized fixed-point map, in R^p or restricted to the sample span"""

    def __init__(self, data: DataSet, config: RegConfig):
        x = data.samples
        self.n, self.p = x.shape
        self.c = config.shrink
        self.path = SolverPath.DENSE
        self.basis: np.ndarray | None = None
        self.y = x

        if config.path is SolverPath.SUBSPACE_AUTO and self.n < self.p:
            u, s, _ = linalg.svd(x.T, full_matrices=False)
            rank = int(np.sum(s > s[0] * max(self.n, self.p) * np.finfo(float).eps))
            self.basis = u[:, :rank]
            self.y = x @ self.basis
            self.path = SolverPath.SUBSPACE_AUTO

        self.dim = self.y.shape[1]
        self.complement = self.p - self.dim  # directions where Sigma = c I

    def start(self) -> np.ndarray:
        return self.c * np.eye(self.dim)

    def apply(self, sigma: np.ndarray, iteration: int) -> tuple[np.ndarray, np.ndarray]:
        chol = factor_iterate(sigma, iteration)
        q = quadratic_forms(chol, self.y)
        if not np.all(np.isfinite(q)) or np.any(q <= 0):
            raise DegenerateIterateError("non-finite or non-positive quadratic form")
        scatter = weighted_scatter(self.y, 1.0 / q)
        update = (1.0 - self.c) * (self.p / self.n) * scatter + self.c * np.eye(self.dim)
        return update, q

    def trace(self, sigma: np.ndarray) -> float:
        return float(np.trace(sigma)) + self.complement * self.c

    def normalized_step(self, old: np.ndarray, new: np.ndarray) -> float:
        """Frobenius distance of the trace-p normalized full-space iterates"""
        t_old, t_new = self.trace(old), self.trace(new)
        inner = self.p * (new / t_new - old / t_old)
        outer = self.p * self.c * (1.0 / t_new - 1.0 / t_old)
        return float(math.sqrt(np.sum(inner**2) + self.complement * outer**2))

    def raw_step(self, old: np.ndarray, new: np.ndarray) -> float:
        """Relative Frobenius change of the unnormalized iterate; the complement block is fixed"""
        return float(np.linalg.norm(new - old, "fro")) / self.frobenius(old)

    def frobenius(self, sigma: np.ndarray) -> float:
        """Frobenius norm of the embedded full-space matrix"""
        return float(math.sqrt(np.sum(sigma**2) + self.complement * self.c**2))

    def embed(self, sigma: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return sigma
        b = self.basis
        full = self.c * (np.eye(self.p) - b @ b.T) + b @ sigma @ b.T
        return symmetrize(full)


def _check_existence(data: DataSet, config: RegConfig) -> bool:
    bound = existence_bound(data.p, data.n)
    if config.alpha > bound:
        return True
    if not config.force:
        raise ExistenceError(
            f"regularized TME needs alpha > max(0, p/n - 1) = {bound:.4g}, "
            f"got alpha={config.alpha} (n={data.n}, p={data.p})"
        )
    logger.warning(
        f"Forcing alpha={config.alpha} below the existence bound {bound:.4g}; "
        "result is not guaranteed"
    )
    return False


def _iterate(problem: _Problem, config: RegConfig) -> Iterator[tuple[np.ndarray, float]]:
    """Yield (iterate, step) for k = 1, 2, ... up to max_iter updates.

    The step is the larger of the normalized and the raw relative change:
    consecutive iterates can be proportional long before the scale settles.
    """
    sigma = problem.start()
    for k in range(config.max_iter):
        nxt, _ = problem.apply(sigma, k)
        nxt = symmetrize(nxt)
        step = max(problem.normalized_step(sigma, nxt), problem.raw_step(sigma, nxt))
        sigma = nxt
        yield sigma, step
        if step < config.tol:
            return


def reg_tyler(data: DataSet, config: RegConfig | None = None) -> TmeSolution:
    """Solve Sigma = 1/(1+a) (p/n) sum x x^T / (x^T Sigma^{-1} x) + a/(1+a) I.

    Starts from a/(1+a) I. With path=subspace-auto and n < p the iteration runs
    on the span of the samples and is embedded back with a/(1+a) on the
    orthogonal complement.
    """
    config = config or RegConfig()
    guaranteed = _check_existence(data, config)
    problem = _Problem(data, config)

    sigma = problem.start()
    step = math.inf
    iterations = 0
    for sigma, step in _iterate(problem, config):
        iterations += 1

    converged = step < config.tol
    if not converged:
        warnings.warn(
            f"regularized Tyler iteration hit max_iter={config.max_iter} "
            f"with step {step:.3e}",
            ConvergenceWarning,
            stacklevel=2,
        )
        logger.warning(
            f"RegTME did not converge: n={problem.n}, p={problem.p}, "
            f"alpha={config.alpha}, step {step:.3e}"
        )

    image, q = problem.apply(sigma, iterations)
    residual = float(np.linalg.norm(image - sigma, "fro")) / problem.frobenius(sigma)
    raw = problem.embed(sigma)

    logger.debug(
        f"RegTME solved ({problem.path.value}): n={problem.n}, p={problem.p}, "
        f"alpha={config.alpha}, iterations={iterations}, step={step:.3e}"
    )
    return TmeSolution(
        estimate=ShapeMatrix.normalized(raw),
        raw=raw,
        weights=1.0 / q,
        iterations=iterations,
        final_step=step,
        residual=residual,
        converged=converged,
        alpha=config.alpha,
        guaranteed=guaranteed,
        path=problem.path,
    )


def reg_weights(solution: TmeSolution, data: DataSet) -> np.ndarray:
    """Unnormalized weights w_i = 1 / (x_i^T Sigma(alpha)^{-1} x_i)"""
    if not solution.converged:
        logger.warning("Extracting weights from a non-converged regularized TME")
    q = quadratic_forms(cholesky_lower(solution.raw), data.samples)
    if not np.all(np.isfinite(q)) or np.any(q <= 0):
        raise DegenerateInputError("non-finite quadratic form while extracting weights")
    return 1.0 / q


def inverse_trace(solution: TmeSolution) -> float:
    """tr(Sigma(alpha)^{-1}); equals p at the regularized fixed point"""
    chol = cholesky_lower(solution.raw)
    inv_chol = linalg.solve_triangular(chol, np.eye(chol.shape[0]), lower=True)
    return float(np.sum(inv_chol**2))


def convergence_trace(
    data: DataSet, config: RegConfig, solution: TmeSolution
) -> ConvergenceTrace:
    """Spectral distance e_k from each iterate to the final one.

    Replays the deterministic iteration instead of storing every iterate.
    """
    problem = _Problem(data, config)
    final = solution.raw
    errors = [spectral_norm(problem.embed(problem.start()) - final)]
    for sigma, _ in _iterate(problem, config):
        errors.append(spectral_norm(problem.embed(sigma) - final))
    return ConvergenceTrace(errors=errors)
