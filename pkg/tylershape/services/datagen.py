"""Elliptical and epsilon-contaminated data generation"""

import logging

import numpy as np
from scipy import linalg

from tylershape.exceptions import NonPositiveDefiniteError
from tylershape.schemas.datasets import (
    ContaminationSpec,
    DataSet,
    EllipticalModel,
    OutlierModel,
    ShapeMatrix,
    ULaw,
    XiMode,
)
from tylershape.utils.linalg import cholesky_lower, symmetrize

logger = logging.getLogger(__name__)


def ar_shape(p: int, rho: float) -> ShapeMatrix:
    """Autoregressive shape s_ij = rho^|i-j|; unit diagonal, so trace p exactly"""
    if p < 1:
        raise ValueError(f"p must be positive, got {p}")
    if abs(rho) >= 1:
        raise ValueError(f"|rho| must be below 1 for a positive definite shape, got {rho}")
    idx = np.arange(p)
    return ShapeMatrix(entries=float(rho) ** np.abs(idx[:, None] - idx[None, :]))


def _draw_xi(mode: XiMode, size: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal(size)
    if mode is XiMode.SPHERE_UNIFORM:
        g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g


def _draw_u(law: ULaw, n: int, rng: np.random.Generator) -> np.ndarray:
    if law is ULaw.CONSTANT:
        return np.ones(n)
    if law is ULaw.LAPLACE:
        return rng.laplace(0.0, 1.0, n)
    return rng.standard_cauchy(n)


def _square_root(shape: ShapeMatrix) -> np.ndarray:
    try:
        return cholesky_lower(shape.entries)
    except np.linalg.LinAlgError as e:
        raise NonPositiveDefiniteError(
            f"shape matrix of dimension {shape.dim} has no Cholesky factor"
        ) from e


def sample_elliptical(
    model: EllipticalModel, n: int, rng: np.random.Generator
) -> DataSet:
    """Draw n samples x = mu + u S^{1/2} xi.

    All xi are drawn before any u, so models differing only in u_law produce
    the same directions from the same stream.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    root = _square_root(model.shape)
    p = model.shape.dim

    xi = _draw_xi(model.xi_mode, (n, p), rng)
    u = _draw_u(model.u_law, n, rng)
    samples = u[:, None] * (xi @ root.T)
    if model.location is not None:
        samples = samples + model.location

    # samples at the origin carry no direction; redraw to keep n fixed
    zero = ~np.any(samples != 0.0, axis=1)
    redraws = 0
    while np.any(zero):
        k = int(zero.sum())
        redraws += k
        xi_k = _draw_xi(model.xi_mode, (k, p), rng)
        u_k = _draw_u(model.u_law, k, rng)
        fresh = u_k[:, None] * (xi_k @ root.T)
        if model.location is not None:
            fresh = fresh + model.location
        samples[zero] = fresh
        zero = ~np.any(samples != 0.0, axis=1)
    if redraws:
        logger.debug(f"Redrew {redraws} samples that landed on the origin")

    return DataSet(samples=samples, meta={"model": model.describe(), "n": n})


def pair_differences(samples: np.ndarray) -> DataSet:
    """x_i = x~_{2i} - x~_{2i-1}; removes an unknown location"""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError("samples must be a 2n x p array")
    if samples.shape[0] % 2:
        raise ValueError(f"pair_differences needs an even sample count, got {samples.shape[0]}")
    return DataSet(samples=samples[1::2] - samples[0::2], meta={"symmetrized": True})


def sample_symmetrized(
    model: EllipticalModel, n: int, rng: np.random.Generator
) -> DataSet:
    raw = sample_elliptical(model, 2 * n, rng)
    data = pair_differences(raw.samples)
    data.meta.update(raw.meta)
    data.meta["n"] = n
    return data


def haar_orthogonal(p: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix"""
    if p < 1:
        raise ValueError(f"p must be positive, got {p}")
    q, r = linalg.qr(rng.standard_normal((p, p)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def outlier_shape(p: int, d_spec: OutlierModel, rng: np.random.Generator) -> ShapeMatrix:
    """U (p D / tr D) U^T with U Haar-random"""
    if d_spec is OutlierModel.SPIKED:
        if p < 2:
            raise ValueError("the spiked outlier model needs p >= 2")
        d = np.ones(p)
        d[0], d[1] = p, p / 2.0
    else:
        d = rng.uniform(1.0, 5.0, p)
    u = haar_orthogonal(p, rng)
    d = p * d / d.sum()
    return ShapeMatrix.normalized(symmetrize((u * d) @ u.T))


def contaminate(spec: ContaminationSpec, n: int, rng: np.random.Generator) -> DataSet:
    """Mix n - round(eps n) inliers with round(eps n) outliers, shuffled, labels kept"""
    n_out = spec.outlier_count(n)
    n_in = n - n_out
    p = spec.inlier.shape.dim

    parts = []
    if n_in:
        parts.append(sample_elliptical(spec.inlier, n_in, rng).samples)
    if n_out:
        out_model = spec.inlier.model_copy(
            update={"shape": outlier_shape(p, spec.outlier_d_spec, rng)}
        )
        parts.append(sample_elliptical(out_model, n_out, rng).samples)

    samples = np.vstack(parts)
    labels = np.concatenate([np.zeros(n_in, dtype=bool), np.ones(n_out, dtype=bool)])
    order = rng.permutation(n)

    logger.debug(f"Contaminated dataset: {n_in} inliers, {n_out} outliers (eps={spec.epsilon})")
    return DataSet(
        samples=samples[order],
        labels=labels[order],
        meta={
            "model": spec.inlier.describe(),
            "epsilon": spec.epsilon,
            "outlier_model": spec.outlier_d_spec.value,
            "n": n,
        },
    )
