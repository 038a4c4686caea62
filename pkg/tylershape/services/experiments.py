"""Monte-Carlo experiment runner for the estimator comparisons"""

import json
import logging
import math
import time
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel

from tylershape.exceptions import ShapeEstimationError
from tylershape.schemas.datasets import (
    ContaminationSpec,
    DataSet,
    EllipticalModel,
    OutlierModel,
    ShapeMatrix,
    ULaw,
)
from tylershape.schemas.estimators import RegConfig, ShapeEstimate, ThresholdSchedule
from tylershape.schemas.experiments import (
    EXTRA_COLUMNS,
    ROW_COLUMNS,
    ExperimentConfig,
    ExperimentKind,
    ExperimentResult,
    GridPoint,
)
from tylershape.services import reporting
from tylershape.services.datagen import (
    ar_shape,
    contaminate,
    sample_elliptical,
    sample_symmetrized,
)
from tylershape.services.metrics import lre, relative_spectral_error
from tylershape.services.outlier import OutlierScreeningService
from tylershape.services.regtme import c_of_x, existence_bound, recommend_alpha
from tylershape.services.threshold import ShapeEstimationService
from tylershape.utils.rng import realization_stream

logger = logging.getLogger(__name__)

ALPHA_GRID = [0.2, 0.4, 0.6, 0.8] + [float(a) for a in range(1, 21)]

# Desk-scale defaults; a JSON config and CLI flags override these
DEFAULT_EXPERIMENTS: dict[ExperimentKind, dict[str, Any]] = {
    ExperimentKind.ESTIMATOR_GRID: {
        "n_values": [100, 200],
        "p_over_n": [0.5, 1.0, 2.0],
        "u_laws": ["constant", "laplace", "cauchy"],
    },
    ExperimentKind.ALPHA_SWEEP: {
        "points": [{"n": 200, "p": 400}, {"n": 100, "p": 400}, {"n": 100, "p": 200}],
        "alpha": ALPHA_GRID,
        "force_alpha": True,
    },
    ExperimentKind.ALPHA_VS_N: {
        "p_fixed": 120,
        "n_values": list(range(24, 145, 8)),
        "alpha": [1.0, 2.0, 3.0, 4.0],
        "force_alpha": True,
    },
    ExperimentKind.OUTLIER_SCREENING: {
        "n_values": [200],
        "p_over_n": [0.5],
        "epsilons": [0.0, 0.05, 0.1, 0.2, 0.3, 0.4],
        "outlier_models": ["uniform", "spiked"],
        "realizations": 10,
    },
}


class RealizationTask(BaseModel):
    """One (grid point, setting, realization) cell; carries everything to regenerate its data"""
    config: ExperimentConfig
    point: GridPoint
    u_law: ULaw = ULaw.CONSTANT
    alpha: float | str | None = None
    realization: int
    epsilon: float | None = None
    outlier_model: OutlierModel | None = None
    dump_dir: str | None = None

    def stream(self) -> np.random.Generator:
        return realization_stream(self.config.master_seed, self.realization)

    def tag(self) -> str:
        parts = [f"n{self.point.n}", f"p{self.point.p}", self.u_law.value]
        if self.alpha is not None:
            parts.append(f"a{self.alpha}")
        if self.epsilon is not None:
            parts.append(f"eps{self.epsilon}")
        if self.outlier_model is not None:
            parts.append(self.outlier_model.value)
        parts.append(f"r{self.realization}")
        return "_".join(parts)


class _Timer:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.elapsed: float | None = None

    def __enter__(self) -> "_Timer":
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc: object) -> None:
        if self.enabled:
            self.elapsed = time.perf_counter() - self._start


def load_experiment_config(
    kind: ExperimentKind,
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> ExperimentConfig:
    """Defaults for the experiment, then the JSON file, then explicit overrides"""
    data: dict[str, Any] = dict(DEFAULT_EXPERIMENTS[kind])
    if path is not None:
        with open(path, encoding="utf-8") as f:
            data.update(json.load(f))
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    data["experiment"] = kind
    return ExperimentConfig.model_validate(data)


def _generate(task: RealizationTask, truth: ShapeMatrix) -> DataSet:
    cfg = task.config
    rng = task.stream()
    model = EllipticalModel(shape=truth, xi_mode=cfg.xi_mode, u_law=task.u_law)
    if task.epsilon is not None:
        spec = ContaminationSpec(
            epsilon=task.epsilon,
            inlier=model,
            outlier_d_spec=task.outlier_model or OutlierModel.UNIFORM,
        )
        data = contaminate(spec, task.point.n, rng)
    elif cfg.symmetrize:
        data = sample_symmetrized(model, task.point.n, rng)
    else:
        data = sample_elliptical(model, task.point.n, rng)
    data.meta.update({"master_seed": cfg.master_seed, "realization": task.realization})
    return data


def _resolve_alpha(task: RealizationTask, data: DataSet) -> float:
    if task.alpha == "auto":
        return recommend_alpha(c_of_x(data), task.config.R_target)
    return float(task.alpha if task.alpha is not None else task.config.alpha_values()[0])


def _row(
    task: RealizationTask,
    estimator: str,
    alpha: float | None,
    error: float | None = None,
    iterations: int | None = None,
    wall: float | None = None,
    status: str = "ok",
    **extra: Any,
) -> dict[str, Any]:
    row = {
        "experiment": task.config.experiment.value,
        "estimator": estimator,
        "n": task.point.n,
        "p": task.point.p,
        "u_law": task.u_law.value,
        "alpha": alpha,
        "realization": task.realization,
        "seed": task.config.master_seed,
        "rel_spec_error": error,
        "iterations": iterations,
        "wall_time_s": wall,
        "status": status,
    }
    row.update(extra)
    return row


def _failure(e: Exception) -> str:
    return f"error:{type(e).__name__}"


def _dump(task: RealizationTask, name: str, matrix: np.ndarray) -> None:
    if task.config.dump_matrices and task.dump_dir:
        reporting.dump_matrix(matrix, Path(task.dump_dir) / "matrices" / f"{name}_{task.tag()}.csv")


def _estimate_rows(
    task: RealizationTask,
    truth: ShapeMatrix,
    alpha: float | None,
    compute: Callable[[], ShapeEstimate],
    names: tuple[str, ...],
    **extra: Any,
) -> list[dict[str, Any]]:
    """Rows for an estimator and (optionally) its unthresholded companion"""
    timer = _Timer(task.config.record_timing)
    try:
        with timer:
            estimate = compute()
    except (ShapeEstimationError, np.linalg.LinAlgError) as e:
        logger.warning(f"{names[0]} failed for {task.tag()}: {e}")
        failed = [_row(task, name, alpha, status=_failure(e), **extra) for name in names]
        return failed[::-1]

    iterations = estimate.iterations
    status = "ok"
    if estimate.solution is not None and not estimate.solution.converged:
        status = "ok:max_iter"
    rows = [
        _row(
            task,
            names[0],
            alpha,
            relative_spectral_error(estimate.matrix, truth),
            iterations,
            timer.elapsed,
            status,
            **extra,
        )
    ]
    _dump(task, names[0], estimate.matrix)
    if len(names) > 1 and estimate.unthresholded is not None:
        rows.insert(
            0,
            _row(
                task,
                names[1],
                alpha,
                relative_spectral_error(estimate.unthresholded, truth),
                iterations,
                timer.elapsed,
                status,
                **extra,
            ),
        )
        _dump(task, names[1], estimate.unthresholded)
    return rows


def _estimators(cfg: ExperimentConfig, alpha: float) -> ShapeEstimationService:
    return ShapeEstimationService(
        RegConfig(alpha=alpha, tol=cfg.tol, max_iter=cfg.max_iter, force=cfg.force_alpha),
        ThresholdSchedule(multiplier=cfg.threshold_multiplier),
    )


def _grid_cell(task: RealizationTask) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    cfg = task.config
    truth = ar_shape(task.point.p, cfg.rho)
    data = _generate(task, truth)
    alpha = _resolve_alpha(task, data)
    estimators = _estimators(cfg, alpha)
    rows: list[dict[str, Any]] = []

    sc_rows = _estimate_rows(
        task,
        truth,
        None,
        lambda: estimators.sample_cov(data),
        ("th-SampCov", "SampCov"),
    )
    rows += sc_rows
    reg_rows = _estimate_rows(
        task,
        truth,
        alpha,
        lambda: estimators.regtme(data),
        ("th-RegTME", "RegTME"),
    )
    rows += reg_rows
    if cfg.include_tme and task.point.n > task.point.p:
        tme_rows = _estimate_rows(
            task,
            truth,
            None,
            lambda: estimators.tme(data),
            ("th-TME", "TME"),
        )
        rows += tme_rows
    return rows, []


def _alpha_cell(task: RealizationTask) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    cfg = task.config
    truth = ar_shape(task.point.p, cfg.rho)
    data = _generate(task, truth)
    alpha = _resolve_alpha(task, data)
    guaranteed = alpha > existence_bound(task.point.p, task.point.n)
    rows = _estimate_rows(
        task,
        truth,
        alpha,
        lambda: _estimators(cfg, alpha).regtme(data),
        ("th-RegTME",),
        guaranteed=guaranteed,
    )
    return rows, []


def _screening_cell(task: RealizationTask) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    cfg = task.config
    truth = ar_shape(task.point.p, cfg.rho)
    data = _generate(task, truth)
    alpha = _resolve_alpha(task, data)
    estimators = _estimators(cfg, alpha)
    screener = OutlierScreeningService(
        estimators.reg_config, estimators.schedule, cfg.level_set_ratio
    )
    model = task.outlier_model or OutlierModel.UNIFORM
    extra = {"epsilon": task.epsilon, "outlier_model": model.value}

    rows = _estimate_rows(
        task,
        truth,
        alpha,
        lambda: estimators.regtme(data),
        ("th-RegTME",),
        **extra,
    )

    report: dict[str, Any] = {
        "epsilon": task.epsilon,
        "outlier_model": extra["outlier_model"],
        "n": task.point.n,
        "p": task.point.p,
        "u_law": task.u_law.value,
        "alpha": alpha,
        "realization": task.realization,
        "seed": cfg.master_seed,
        "outlier_labels": int(data.labels.sum()) if data.labels is not None else 0,
    }
    holder: dict[str, Any] = {}

    def screened() -> ShapeEstimate:
        holder["report"] = screener.screen(data)
        return screener.reestimate(data, holder["report"])

    screened_rows = _estimate_rows(
        task, truth, alpha, screened, ("screened-th-RegTME",), **extra
    )
    rows += screened_rows
    if "report" in holder:
        report.update(holder["report"].to_json_dict())
    report["status"] = screened_rows[0]["status"]
    return rows, [report]


CELL_RUNNERS = {
    ExperimentKind.ESTIMATOR_GRID: _grid_cell,
    ExperimentKind.ALPHA_SWEEP: _alpha_cell,
    ExperimentKind.ALPHA_VS_N: _alpha_cell,
    ExperimentKind.OUTLIER_SCREENING: _screening_cell,
}


def run_realization(task: RealizationTask) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    """Compute one cell; module-level so worker processes can import it"""
    if task.config.dump_datasets and task.dump_dir:
        truth = ar_shape(task.point.p, task.config.rho)
        data = _generate(task, truth)
        reporting.dump_matrix(
            data.samples, Path(task.dump_dir) / "datasets" / f"{task.tag()}.csv"
        )
    return CELL_RUNNERS[task.config.experiment](task)


class ExperimentRunner:
    """Expand a config into realization tasks, execute them and write the results"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.output_dir = Path(config.output_dir) / config.experiment.value

    def tasks(self) -> list[RealizationTask]:
        cfg = self.config
        dump_dir = str(self.output_dir) if (cfg.dump_matrices or cfg.dump_datasets) else None
        kind = cfg.experiment
        cells: list[dict[str, Any]] = []
        for point in cfg.grid_points():
            if kind is ExperimentKind.ESTIMATOR_GRID:
                cells += [{"point": point, "u_law": u} for u in cfg.u_laws]
            elif kind is ExperimentKind.OUTLIER_SCREENING:
                cells += [
                    {"point": point, "u_law": u, "epsilon": eps, "outlier_model": model}
                    for model in cfg.outlier_models
                    for eps in cfg.epsilons
                    for u in cfg.u_laws
                ]
            else:
                cells += [
                    {"point": point, "u_law": u, "alpha": a}
                    for a in cfg.alpha_values()
                    for u in cfg.u_laws
                ]

        tasks = []
        for cell in cells:
            if kind is not ExperimentKind.ALPHA_SWEEP and kind is not ExperimentKind.ALPHA_VS_N:
                cell.setdefault("alpha", cfg.alpha_values()[0])
            for r in range(cfg.realizations):
                tasks.append(
                    RealizationTask(
                        config=cfg, realization=r, dump_dir=dump_dir, **cell
                    )
                )
        return tasks

    def execute(
        self, tasks: list[RealizationTask]
    ) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
        """Run all tasks; results come back in task order regardless of worker count"""
        if self.config.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=self.config.workers) as pool:
                results = list(pool.map(run_realization, tasks))
        else:
            results = []
            current: GridPoint | None = None
            for task in tasks:
                if task.point != current:
                    current = task.point
                    logger.info(f"Grid point n={current.n}, p={current.p}")
                results.append(run_realization(task))

        rows: list[dict[str, Any]] = []
        reports: list[dict[str, Any]] = []
        for cell_rows, cell_reports in results:
            rows += cell_rows
            reports += cell_reports
        return rows, reports

    def frame(self, rows: list[dict[str, Any]]) -> pd.DataFrame:
        columns = ROW_COLUMNS + EXTRA_COLUMNS[self.config.experiment.value]
        df = pd.DataFrame(rows, columns=columns)
        for col in ("alpha", "rel_spec_error", "wall_time_s"):
            df[col] = pd.to_numeric(df[col], errors="coerce").astype(float)
        df["iterations"] = pd.to_numeric(df["iterations"], errors="coerce").astype("Int64")
        return df

    def summarize(self, df: pd.DataFrame) -> pd.DataFrame:
        """LRE per grid point and estimator over the successful realizations"""
        keys = ["experiment", "estimator", "n", "p", "u_law", "alpha"]
        keys += [c for c in EXTRA_COLUMNS[self.config.experiment.value] if c != "guaranteed"]
        records = []
        for key, group in df.groupby(keys, sort=False, dropna=False):
            ok = group.loc[group["status"].str.startswith("ok"), "rel_spec_error"]
            record = dict(zip(keys, key, strict=True))
            mean = float(ok.mean()) if len(ok) else math.nan
            record.update(
                {
                    "realizations": len(group),
                    "failures": int(len(group) - len(ok)),
                    "mean_rel_error": mean,
                    "median_rel_error": float(ok.median()) if len(ok) else math.nan,
                    "lre": lre(ok.to_numpy()) if len(ok) and mean > 0 else math.nan,
                }
            )
            records.append(record)
        return pd.DataFrame(records)

    def run(self) -> ExperimentResult:
        started = datetime.now(timezone.utc)
        tasks = self.tasks()
        logger.info(
            f"Running {self.config.experiment.value}: {len(tasks)} realization cells, "
            f"{self.config.workers} worker(s)"
        )
        rows, reports = self.execute(tasks)
        df = self.frame(rows)
        summary = self.summarize(df)
        failures = int((~df["status"].str.startswith("ok")).sum())
        if failures:
            logger.warning(f"{failures} of {len(df)} rows recorded failures")

        files = reporting.write_experiment(
            self.output_dir, self.config, df, summary, reports, started
        )
        logger.info(f"Wrote results to {self.output_dir}")
        return ExperimentResult(
            experiment=self.config.experiment,
            rows=df,
            summary=summary,
            reports=reports,
            files=files,
        )


def run_estimator_grid(config: ExperimentConfig) -> ExperimentResult:
    """SampCov, th-SampCov, RegTME and th-RegTME on AR-shaped scale mixtures"""
    return ExperimentRunner(_as_kind(config, ExperimentKind.ESTIMATOR_GRID)).run()


def run_alpha_sweep(config: ExperimentConfig) -> ExperimentResult:
    """th-RegTME error and cost across alpha at fixed (n, p) points"""
    return ExperimentRunner(_as_kind(config, ExperimentKind.ALPHA_SWEEP)).run()


def run_alpha_vs_n(config: ExperimentConfig) -> ExperimentResult:
    """th-RegTME error and cost across n at fixed p for a few alpha values"""
    return ExperimentRunner(_as_kind(config, ExperimentKind.ALPHA_VS_N)).run()


def run_outlier_screening(config: ExperimentConfig) -> ExperimentResult:
    """th-RegTME before and after weight-based screening under contamination"""
    return ExperimentRunner(_as_kind(config, ExperimentKind.OUTLIER_SCREENING)).run()


def _as_kind(config: ExperimentConfig, kind: ExperimentKind) -> ExperimentConfig:
    if config.experiment is not kind:
        raise ValueError(f"expected a {kind.value} config, got {config.experiment.value}")
    return config


RUNNERS = {
    ExperimentKind.ESTIMATOR_GRID: run_estimator_grid,
    ExperimentKind.ALPHA_SWEEP: run_alpha_sweep,
    ExperimentKind.ALPHA_VS_N: run_alpha_vs_n,
    ExperimentKind.OUTLIER_SCREENING: run_outlier_screening,
}
