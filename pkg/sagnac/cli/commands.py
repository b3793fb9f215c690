"""
Subcommand handlers.

Each handler loads the run configuration, delegates to ExperimentService and
echoes the key=value report to stdout.
"""
import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List

from sagnac.core.config import RunConfig, load_run_config
from sagnac.core.logging import bind_run_context, get_logger, setup_logging
from sagnac.models.report import CommandReport
from sagnac.services.experiment_service import ExperimentService
from sagnac.utils.csv_io import render_report

logger = get_logger(__name__)


def load_config(args: argparse.Namespace) -> RunConfig:
    """Build the RunConfig from --config with --seed and --out layered on top."""
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output"] = {"directory": args.out}
    config = load_run_config(Path(args.config) if args.config else None, **overrides)
    if config.debug and not args.debug:
        setup_logging(debug=True)
    bind_run_context(seed=config.seed, output=str(config.output_dir))
    return config


def emit(reports: List[CommandReport]) -> int:
    for report in reports:
        sys.stdout.write(render_report(report.entries))
        logger.info(
            f"Command {report.command} completed",
            extra={"extra_fields": {"artifacts": report.artifacts}}
        )
    return 0


def cmd_fringe(args: argparse.Namespace) -> int:
    config = load_config(args)
    service = ExperimentService(config)
    angles = [args.theta2] if args.theta2 is not None else config.scan.theta2_deg
    return emit([service.fringe(theta2) for theta2 in angles])


def cmd_chsh(args: argparse.Namespace) -> int:
    service = ExperimentService(load_config(args))
    return emit([service.chsh()])


def cmd_sweep_aperture(args: argparse.Namespace) -> int:
    config = load_config(args)
    divergences = args.divergences if args.divergences is not None else config.scan.sweep_divergences_mrad
    return emit([ExperimentService(config).sweep_aperture(divergences)])


def cmd_balance(args: argparse.Namespace) -> int:
    service = ExperimentService(load_config(args))
    return emit([service.balance()])


def cmd_fit(args: argparse.Namespace) -> int:
    service = ExperimentService(load_config(args))
    return emit([service.fit_file(Path(args.csv_path))])
