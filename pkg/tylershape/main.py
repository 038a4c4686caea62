"""bench: command-line entry point for the benchmark experiments"""

import argparse
import logging
import sys
import uuid
from typing import Any

from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from tylershape import __version__
from tylershape.config import settings
from tylershape.schemas.experiments import ExperimentKind, ExperimentResult
from tylershape.services.experiments import RUNNERS, load_experiment_config
from tylershape.utils.logging import run_context, setup_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Monte-Carlo benchmarks for thresholded regularized Tyler shape estimation",
        epilog=(
            "alpha-sweep and alpha-vs-n report wall time per alpha only with --timing; "
            "without it wall_time_s stays empty so reruns are byte-identical"
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "experiment", choices=[k.value for k in ExperimentKind], help="experiment to run"
    )
    parser.add_argument("--config", help="JSON file with ExperimentConfig fields")
    parser.add_argument("--seed", type=int, dest="master_seed", help="master seed")
    parser.add_argument("--out", dest="output_dir", help="output directory")
    parser.add_argument("--realizations", type=int)
    parser.add_argument(
        "--alpha",
        nargs="+",
        help="one or more alpha values, or 'auto' for the convergence-ratio rule",
    )
    parser.add_argument("--n", type=int, nargs="+", dest="n_values", help="sample sizes")
    parser.add_argument("--ratio", type=float, nargs="+", dest="p_over_n", help="p/n ratios")
    parser.add_argument("--threshold-mult", type=float, dest="threshold_multiplier")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--max-iter", type=int, dest="max_iter")
    parser.add_argument(
        "--force-alpha",
        action="store_true",
        default=None,
        dest="force_alpha",
        help="run alpha values below the existence bound instead of rejecting them",
    )
    parser.add_argument(
        "--timing",
        action="store_true",
        default=None,
        dest="record_timing",
        help=(
            "record wall_time_s per estimator, needed for the runtime columns of "
            "alpha-sweep and alpha-vs-n (data files are then no longer reproducible)"
        ),
    )
    parser.add_argument(
        "--dump-matrices",
        action="store_true",
        default=None,
        dest="dump_matrices",
        help="write every estimate under <out>/<experiment>/matrices/",
    )
    parser.add_argument(
        "--dump-datasets",
        action="store_true",
        default=None,
        dest="dump_datasets",
        help="write every generated dataset under <out>/<experiment>/datasets/",
    )
    parser.add_argument("--workers", type=int, help="worker processes")
    parser.add_argument("--log-level", help="override TYLERSHAPE_LOG_LEVEL")
    return parser


def _parse_alpha(values: list[str] | None) -> Any:
    if not values:
        return None
    if values == ["auto"]:
        return "auto"
    alphas = [float(v) for v in values]
    return alphas[0] if len(alphas) == 1 else alphas


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    fields = [
        "master_seed",
        "output_dir",
        "realizations",
        "n_values",
        "p_over_n",
        "threshold_multiplier",
        "tol",
        "max_iter",
        "force_alpha",
        "record_timing",
        "dump_matrices",
        "dump_datasets",
        "workers",
    ]
    overrides = {name: getattr(args, name) for name in fields}
    overrides["alpha"] = _parse_alpha(args.alpha)
    return {k: v for k, v in overrides.items() if v is not None}


def print_summary(result: ExperimentResult, console: Console | None = None) -> None:
    console = console or Console()
    table = Table(title=f"{result.experiment.value}: log relative error by grid point")
    columns = [c for c in result.summary.columns if c != "experiment"]
    for column in columns:
        table.add_column(column, justify="left" if column in ("estimator", "u_law") else "right")
    for record in result.summary.to_dict(orient="records"):
        table.add_row(*[_cell(record[c]) for c in columns])
    console.print(table)
    for name, path in result.files.items():
        console.print(f"[dim]{name}:[/dim] {path}")


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return "" if value != value else f"{value:.4g}"
    return str(value)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level.upper() if args.log_level else None)

    config_check = settings.validate_configuration()
    for warning in config_check["warnings"]:
        logger.warning(warning)
    if config_check["errors"]:
        for error in config_check["errors"]:
            logger.error(error)
        return 1

    kind = ExperimentKind(args.experiment)
    try:
        config = load_experiment_config(kind, args.config, overrides_from_args(args))
    except (ValidationError, ValueError, OSError) as e:
        logger.error(f"Invalid experiment configuration: {e}")
        return 1

    with run_context(uuid.uuid4().hex[:12]):
        logger.info(f"Starting {kind.value} (master_seed={config.master_seed})")
        result = RUNNERS[kind](config)
        print_summary(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
