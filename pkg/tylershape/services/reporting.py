"""Result files: rows and summary CSVs, JSON metadata and optional matrix dumps"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from tylershape import __version__
from tylershape.schemas.experiments import ExperimentConfig
from tylershape.utils.logging import current_run_id
from tylershape.utils.rng import RNG_IDENTIFIER

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def write_rows_csv(df: pd.DataFrame, path: Path) -> Path:
    """UTF-8, header row, missing values as empty fields"""
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, na_rep="", float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _write_json(payload: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def metadata(config: ExperimentConfig) -> dict[str, Any]:
    """Everything needed to regenerate the run; no clock or host details"""
    return {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "rng": RNG_IDENTIFIER,
        "stream_seed": "SeedSequence([master_seed, realization])",
        "config": config.model_dump(mode="json", exclude={"output_dir", "workers"}),
    }


def run_info(started: datetime) -> dict[str, Any]:
    return {
        "run_id": current_run_id(),
        "started_at": started.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }


def dump_matrix(matrix: np.ndarray, path: Path) -> Path:
    """Comma-separated with 17 significant digits, enough to round-trip a double"""
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.atleast_2d(matrix), delimiter=",", fmt=FLOAT_FORMAT)
    return path


def load_matrix(path: Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_experiment(
    output_dir: Path,
    config: ExperimentConfig,
    rows: pd.DataFrame,
    summary: pd.DataFrame,
    reports: list[dict[str, Any]],
    started: datetime | None = None,
) -> dict[str, str]:
    """Write every result file of one run; returns name -> path"""
    started = started or datetime.now(timezone.utc)
    files = {
        "rows": write_rows_csv(rows, output_dir / "rows.csv"),
        "summary": write_rows_csv(summary, output_dir / "summary.csv"),
        "metadata": _write_json(metadata(config), output_dir / "metadata.json"),
        "run_info": _write_json(run_info(started), output_dir / "run_info.json"),
    }
    if reports:
        files["screening_reports"] = _write_json(reports, output_dir / "screening_reports.json")
    logger.debug(f"Wrote {len(files)} result files under {output_dir}")
    return {name: str(path) for name, path in files.items()}
