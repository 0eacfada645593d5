# scripts/run_experiment.py
import sys
import argparse
import logging
from pathlib import Path

# Add the project root to the Python path
project_root = Path(__file__).resolve().parents[1]
sys.path.append(str(project_root))

from src.config import config_hash, load_config
from src.evaluation import (
    ExperimentContext,
    ResultTable,
    describe_experiments,
    make_run_dir,
    run_suite,
    run_timestamp,
    save_results,
    save_summary_figure,
    write_manifest,
    write_summary,
)
from src.evaluation.experiments import EXPERIMENTS
from src.utils.exceptions import ConfigError, NumericalError
from src.utils.logging_config import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


def run_command(config_path: str | Path, experiment: str, parallel: bool = False, progress: bool = False) -> int:
    """
    Runs one experiment suite and writes its artifacts.

    Artifacts go to <output.dir>/<experiment>/<timestamp>/: results.csv,
    manifest.txt, summary.json, run.log and, if enabled, summary.png.

    Returns:
        int: 0 if every pass flag is true, 1 if some check failed, 2 on a
        configuration error, 3 on a numerical failure.
    """
    try:
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"Unknown experiment '{experiment}'. Available: {', '.join(EXPERIMENTS)}.")
        config = load_config(config_path)
    except ConfigError as e:
        setup_logging()
        logger.error(f"Configuration error: {e}")
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if progress:
        config.output.progress = True
    timestamp = run_timestamp()
    run_dir = make_run_dir(config.output.dir, experiment, timestamp)
    setup_logging(log_file=run_dir / "run.log")
    logger.info(f"Experiment '{experiment}' with config {config_path} -> {run_dir}")

    ctx = ExperimentContext(config=config, run_dir=run_dir, parallel=parallel)
    exit_code = EXIT_OK
    try:
        table = run_suite(experiment, ctx)
        if not table.all_passed:
            for row in table.failures():
                logger.warning(f"Check failed: {row['fixture']} {row['resolution']} {row['metric']}={row['value']:.6g}")
            exit_code = EXIT_FAILED_CHECKS
    except ConfigError as e:
        logger.error(f"Configuration error in fixture '{ctx.fixture}': {e}")
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except NumericalError as e:
        logger.error(f"Numerical failure in fixture '{ctx.fixture}': {e}", exc_info=True)
        table = ResultTable(experiment)
        table.add(ctx.fixture or experiment, "n/a", "numerical-error", float("nan"), passed=False)
        exit_code = EXIT_NUMERICAL_ERROR

    save_results(table, run_dir)
    write_manifest(run_dir, experiment, timestamp, config_hash(config), config.experiments.seed)
    write_summary(table, run_dir)
    if config.output.save_figure:
        save_summary_figure(table, run_dir)

    logger.info(f"Experiment '{experiment}' finished with exit code {exit_code}")
    return exit_code


def validate_command(config_path: str | Path) -> int:
    setup_logging()
    try:
        config = load_config(config_path)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    print(f"{config_path}: valid (hash {config_hash(config)})")
    return EXIT_OK


def list_command() -> int:
    for name, description in describe_experiments().items():
        print(f"{name:<18} {description}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Run the numerical experiment suites of the McKean-Vlasov control toolkit.",
        formatter_class=argparse.RawTextHelpFormatter
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run one experiment suite.")
    run_parser.add_argument("config", type=str, help="Path to the YAML configuration file.")
    run_parser.add_argument("experiment", type=str, help="Experiment name (see `list`).")
    run_parser.add_argument(
        "--parallel",
        action="store_true",
        help="Use thread pools inside the experiment.\n"
             "Results are identical to a sequential run."
    )
    run_parser.add_argument("--progress", action="store_true", help="Show progress bars.")

    validate_parser = subparsers.add_parser("validate", help="Load and validate a configuration file.")
    validate_parser.add_argument("config", type=str, help="Path to the YAML configuration file.")

    subparsers.add_parser("list", help="List the available experiments.")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run_command(args.config, args.experiment, parallel=args.parallel, progress=args.progress)
    if args.command == "validate":
        return validate_command(args.config)
    return list_command()


if __name__ == "__main__":
    sys.exit(main())
