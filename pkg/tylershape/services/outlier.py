"""Weight-based outlier screening with the regularized TME"""

import logging
import math

import numpy as np
from scipy import stats

from tylershape.config import settings
from tylershape.exceptions import DegenerateInputError, ScreeningFailureError
from tylershape.schemas.datasets import DataSet
from tylershape.schemas.estimators import RegConfig, ShapeEstimate, ThresholdSchedule
from tylershape.schemas.outliers import KernelDensity, ScreeningReport
from tylershape.services.regtme import reg_tyler, reg_weights
from tylershape.services.threshold import ShapeEstimationService

logger = logging.getLogger(__name__)


def silverman_bandwidth(values: np.ndarray) -> float:
    """0.9 min(std, IQR/1.34) n^(-1/5), falling back to std when the IQR vanishes"""
    std = float(np.std(values, ddof=1))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25)
    spread = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * spread * len(values) ** (-0.2)


def kde(values: np.ndarray, grid_points: int | None = None) -> KernelDensity:
    """Gaussian-kernel density on a grid spanning [min - 3h, max + 3h]"""
    v = np.asarray(values, dtype=float).ravel()
    grid_points = grid_points or settings.kde_grid_points
    if v.size < 2:
        raise DegenerateInputError("kde needs at least two values")
    scale = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    if np.ptp(v) <= 1e-9 * scale:
        raise DegenerateInputError("kde input values are all equal")

    h = silverman_bandwidth(v)
    grid = np.linspace(v.min() - 3.0 * h, v.max() + 3.0 * h, grid_points)
    density = stats.norm.pdf((grid[:, None] - v[None, :]) / h).sum(axis=1) / (v.size * h)
    return KernelDensity(grid=grid, density=density, bandwidth=h)


def _crossing(grid: np.ndarray, f: np.ndarray, inside: int, outside: int, level: float) -> float:
    """Abscissa where f crosses level between an inside and an outside grid point"""
    f_in, f_out = f[inside], f[outside]
    if f_in == f_out:
        return float(grid[outside])
    frac = (f_in - level) / (f_in - f_out)
    return float(grid[inside] + frac * (grid[outside] - grid[inside]))


def inlier_stats_from_density(
    grid: np.ndarray, density: np.ndarray, r: float
) -> tuple[float, float]:
    """Mode and Gaussian-equivalent spread from the r-level set around the mode.

    The half-width of {f >= r f_max} of a Gaussian is sigma sqrt(-2 ln r).
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"level-set ratio must lie in (0, 1), got {r}")
    grid = np.asarray(grid, dtype=float)
    f = np.asarray(density, dtype=float)
    top = int(np.argmax(f))
    level = r * f[top]

    lo = top
    while lo > 0 and f[lo - 1] >= level:
        lo -= 1
    hi = top
    while hi < f.size - 1 and f[hi + 1] >= level:
        hi += 1

    w_left = _crossing(grid, f, lo, lo - 1, level) if lo > 0 else float(grid[0])
    w_right = _crossing(grid, f, hi, hi + 1, level) if hi < f.size - 1 else float(grid[-1])
    sigma = 0.5 * (w_right - w_left) / math.sqrt(-2.0 * math.log(r))
    return float(grid[top]), sigma


def estimate_inlier_stats(
    weights: np.ndarray, r: float | None = None
) -> tuple[float, float]:
    """(w_in, sigma_in) of the dominant weight cluster"""
    r = settings.level_set_ratio if r is None else r
    density = kde(weights)
    return inlier_stats_from_density(density.grid, density.density, r)


def normalize_samples(data: DataSet) -> DataSet:
    norms = np.linalg.norm(data.samples, axis=1)
    return data.scaled(1.0 / norms)


class OutlierScreeningService:
    """Screen samples by their regularized-TME weight and re-estimate on the rest"""

    def __init__(
        self,
        reg_config: RegConfig | None = None,
        schedule: ThresholdSchedule | None = None,
        r: float | None = None,
    ):
        self.reg_config = reg_config or RegConfig()
        self.r = settings.level_set_ratio if r is None else r
        self.estimator = ShapeEstimationService(self.reg_config, schedule)

    def minimum_kept(self, p: int) -> float:
        return max(p / (1.0 + self.reg_config.alpha) + 1.0, settings.min_kept_samples)

    def screen(self, data: DataSet) -> ScreeningReport:
        """Keep samples whose weight lies in [w_in - 2 sigma_in, w_in + 2 sigma_in]"""
        unit = normalize_samples(data)
        solution = reg_tyler(unit, self.reg_config)
        weights = reg_weights(solution, unit)

        density = kde(weights)
        w_in, sigma_in = inlier_stats_from_density(density.grid, density.density, self.r)
        bounds = (w_in - 2.0 * sigma_in, w_in + 2.0 * sigma_in)
        kept = np.flatnonzero((weights >= bounds[0]) & (weights <= bounds[1]))

        n_outliers = outliers_kept = None
        if data.labels is not None:
            n_outliers = int(data.labels.sum())
            outliers_kept = int(data.labels[kept].sum())

        report = ScreeningReport(
            weights=weights,
            density=density,
            w_in=w_in,
            sigma_in=sigma_in,
            kept=kept.tolist(),
            bounds=bounds,
            n_outliers=n_outliers,
            outliers_kept=outliers_kept,
        )
        logger.info(
            f"Screening kept {kept.size}/{data.n} samples "
            f"(w_in={w_in:.4g}, sigma_in={sigma_in:.3g})"
        )
        return report

    def reestimate(self, data: DataSet, report: ScreeningReport) -> ShapeEstimate:
        minimum = self.minimum_kept(data.p)
        if len(report.kept) < minimum:
            raise ScreeningFailureError(
                f"screening kept {len(report.kept)} of {data.n} samples, "
                f"need at least {minimum:.1f}"
            )
        # the regularized TME ignores per-sample scale, so the raw kept samples do
        estimate = self.estimator.regtme(data.subset(report.kept))
        estimate.estimator = "screened-th-RegTME"
        return estimate

    def screen_and_reestimate(self, data: DataSet) -> tuple[ScreeningReport, ShapeEstimate]:
        report = self.screen(data)
        return report, self.reestimate(data, report)


def screen_and_reestimate(
    data: DataSet,
    reg_config: RegConfig | None = None,
    schedule: ThresholdSchedule | None = None,
    r: float | None = None,
) -> tuple[ScreeningReport, ShapeEstimate]:
    """Drop samples whose weight leaves [w_in - 2 sigma_in, w_in + 2 sigma_in], then re-estimate"""
    return OutlierScreeningService(reg_config, schedule, r).screen_and_reestimate(data)
