from __future__ import annotations

import argparse
import logging
from typing import Sequence

from fmkinetics import __version__
from fmkinetics.app.experiments import run_experiment
from fmkinetics.app.settings import ExperimentName, load_experiment_config
from fmkinetics.config import LOG_LEVEL
from fmkinetics.core.errors import (
    ConfigError,
    DatasetValidationError,
    FlowKineticsError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

EXPERIMENTS = tuple(name.value for name in ExperimentName)


def _setup_logging(level: str = LOG_LEVEL) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s:%(name)s: %(message)s",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmkinetics",
        description="Run empirical flow-matching energetics experiments from a config file.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write its artifacts")
    run.add_argument("experiment", nargs="?", default=None, help=f"one of {', '.join(EXPERIMENTS)}; overrides the config")
    run.add_argument("--config", required=True, help="experiment config (.json, .yaml or .yml)")
    run.add_argument("--workers", type=int, default=1, help="worker threads for trajectory batches (default 1)")
    run.add_argument("--output-dir", default=None, help="override the config's output_dir")
    run.add_argument("--log-level", default=LOG_LEVEL, help=f"logging level (default {LOG_LEVEL})")
    return parser


def run(
    config_path: str,
    experiment: str | None = None,
    workers: int = 1,
    output_dir: str | None = None,
) -> int:
    """Load and validate the config, run the experiment, and map failures to exit codes."""
    if workers < 1:
        logger.error("--workers must be at least 1")
        return EXIT_CONFIG
    if experiment is not None and experiment not in EXPERIMENTS:
        logger.error(f"Unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        return EXIT_CONFIG

    try:
        config = load_experiment_config(config_path, experiment)
    except ConfigError as exc:
        logger.error(f"Config error: {exc}")
        return EXIT_CONFIG

    try:
        run_experiment(config, output_dir=output_dir, workers=workers)
    except (ConfigError, DatasetValidationError, FileNotFoundError) as exc:
        logger.error(f"Config error: {exc}")
        logger.debug("Traceback", exc_info=True)
        return EXIT_CONFIG
    except FlowKineticsError as exc:
        logger.error(f"Numerical failure: {exc}")
        logger.debug("Traceback", exc_info=True)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.log_level)
    if args.command == "run":
        return run(args.config, args.experiment, args.workers, args.output_dir)
    return EXIT_CONFIG
