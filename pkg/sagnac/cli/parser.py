"""
Argument parser aggregating every subcommand.
"""
import argparse
from typing import List

from sagnac import __version__
from sagnac.cli import commands


def divergence_list(text: str) -> List[float]:
    """Parse a comma-separated list of divergences in mrad."""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("divergence list is empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sagnac",
        description="Simulate and analyze a polarization-Sagnac entangled photon source",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="TOML run configuration (defaults only when omitted)")
    common.add_argument("--seed", type=int, default=None, help="Master RNG seed")
    common.add_argument("--out", type=str, default=None, help="Output directory")
    common.add_argument("--debug", action="store_true", help="Human-readable DEBUG logging")

    subparsers = parser.add_subparsers(dest="command", required=True)

    fringe = subparsers.add_parser("fringe", parents=[common], help="Simulate and fit a polarization fringe")
    fringe.add_argument("--theta2", type=float, default=None, metavar="DEG",
                        help="Idler analyzer angle; every configured angle when omitted")
    fringe.set_defaults(handler=commands.cmd_fringe)

    chsh = subparsers.add_parser("chsh", parents=[common], help="Simulate the CHSH measurement set")
    chsh.set_defaults(handler=commands.cmd_chsh)

    sweep = subparsers.add_parser("sweep-aperture", parents=[common],
                                  help="Visibility and flux versus collection divergence")
    sweep.add_argument("--divergences", type=divergence_list, default=None, metavar="LIST",
                       help="Comma-separated divergences in mrad")
    sweep.set_defaults(handler=commands.cmd_sweep_aperture)

    balance = subparsers.add_parser("balance", parents=[common], help="Solve the pump plates for beta = 1")
    balance.set_defaults(handler=commands.cmd_balance)

    fit = subparsers.add_parser("fit", parents=[common], help="Fit an existing fringe CSV")
    fit.add_argument("csv_path", type=str, help="Fringe table in the fringe/v1 schema")
    fit.set_defaults(handler=commands.cmd_fit)

    return parser
