import argparse
import logging
import sys
from typing import Optional

from . import __version__
from .commands import COMMANDS, EXIT_INVALID, EXIT_IO
from .config import CONFIG_KEYS, build_run_config
from .exceptions import ConfoundingIntervalError
from .tables import FORMATS

logger = logging.getLogger(__name__)

LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO}

HELP = {
    "interval": "exact confounding interval for a bound box",
    "sweep": "intervals over a lattice of rho_hxhy bound pairs",
    "from-data": "summary statistics and slope checks from a CSV file",
    "region": "realizable tuples whose slope falls outside a range",
    "prior": "distribution of the slope under a prior on the tuple",
    "verify": "cross-check the exact solver against the oracles",
}


def _pair_flag(parser: argparse.ArgumentParser, flag: str, help: str, metavar=("L", "U")):
    parser.add_argument(flag, nargs=2, type=float, metavar=metavar, help=help)


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rho-xy", type=float, metavar="R", help="correlation of x and y")
    common.add_argument(
        "--sigma-ratio", type=float, metavar="S", help="sigma_y / sigma_x"
    )
    _pair_flag(common, "--r2x", "bounds on R^2 of x on the confounders")
    _pair_flag(common, "--r2y", "bounds on R^2 of y on the confounders")
    _pair_flag(common, "--rho-hxhy", "bounds on the fitted-value correlation (default -1 1)")
    common.add_argument("--config", metavar="PATH", help="JSON config file or http(s) URL")
    common.add_argument("--format", choices=FORMATS, help="output format (default table)")
    common.add_argument("--out", metavar="PATH", help="write output to a file")
    common.add_argument("--seed", type=int, metavar="K", help="random seed")
    common.add_argument("--resolution", type=int, metavar="M", help="grid nodes per axis")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug"
    )
    return common


def _extra_flags(parser: argparse.ArgumentParser):
    _pair_flag(parser, "--rho-hx-y", "bounds on corr(xhat, y)")
    _pair_flag(parser, "--rho-x-hy", "bounds on corr(x, yhat)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confounding-interval",
        description="Bounds on a regression slope under unmeasured confounding.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common_parser()

    parsers = {
        name: subparsers.add_parser(name, parents=[common], help=text, description=text)
        for name, text in HELP.items()
    }

    _extra_flags(parsers["interval"])

    parsers["sweep"].add_argument(
        "--steps", type=int, metavar="K", help="K + 1 rho values on [-1, 1] (default 20)"
    )

    parsers["from-data"].add_argument("--data", metavar="PATH", help="CSV with x, y, w1..wp")
    parsers["from-data"].add_argument(
        "--group-by", metavar="COLUMN", help="repeat the analysis per level of COLUMN"
    )

    _pair_flag(
        parsers["region"], "--exclude", "range of practically significant slopes",
        metavar=("LO", "HI"),
    )
    _extra_flags(parsers["region"])

    parsers["prior"].add_argument("--samples", type=int, metavar="N", help="accepted samples")
    shape = parsers["prior"].add_mutually_exclusive_group()
    shape.add_argument(
        "--uniform", action="store_true", default=None, help="uniform prior on the box (default)"
    )
    _pair_flag(shape, "--beta", "beta(A, B) prior mapped onto each bound", metavar=("A", "B"))
    _extra_flags(parsers["prior"])

    parsers["verify"].add_argument(
        "--cases", type=int, metavar="N", help="random cases per check (default 20)"
    )
    return parser


def configure_logging(verbosity: int):
    logging.basicConfig(
        level=LOG_LEVELS.get(verbosity, logging.DEBUG),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.verbose)
    flags = {key: getattr(args, key.replace("-", "_"), None) for key in CONFIG_KEYS}
    try:
        config = build_run_config(
            args.command,
            flags,
            config_location=args.config,
            data_path=getattr(args, "data", None),
        )
    except ConfoundingIntervalError as e:
        logger.error(str(e))
        return EXIT_INVALID
    except OSError as e:
        logger.error(str(e))
        return EXIT_IO
    except (TypeError, ValueError) as e:
        logger.error(f"invalid value: {e}")
        return EXIT_INVALID

    result = COMMANDS[args.command](config).run()
    if result.output:
        sys.stdout.write(result.output)
    return result.exit_code
