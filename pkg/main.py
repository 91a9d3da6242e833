import argparse
import logging
import sys

from src.cli.commands import COMMAND_HANDLERS, EXIT_CONFIG
from src.cli.config import COMMANDS, RunConfig
from src.utils.errors import BKSRegError

logger = logging.getLogger("bksreg")

CONVENTIONS = """\
conventions:
  each branch of psi_L carries sqrt(i/2): psi+(0) = sqrt(i/2) e^{i pi/4} for m = 0,
  and B(0) = sqrt(i/2) hbar^{-1/4} sqrt(2) (1 + i), a sqrt(2) above the unit-amplitude value
  the fixed-level semiclassical residual scales as hbar (slope 1); fixed energy gives slope 2
  CSV floats carry 17 significant digits; JSON floats use the shortest repr that round-trips
"""


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bksreg",
        description="Kähler-regularized BKS pairings and Maslov-corrected states of the harmonic oscillator",
        epilog=CONVENTIONS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--m", type=int, help="level m (m_max for the spectrum command)")
    parser.add_argument("--hbar", type=float, help="Planck constant")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--verbose", action="store_true", help="debug logging and per-check detail")
    return parser


def main(argv=None):
    """
    Parse arguments, validate the configuration and dispatch the command.

    Returns:
        int: 0 success, 1 configuration, 2 numeric, 3 output failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    overrides = {"hbar": args.hbar, "out": args.out}
    overrides["m_max" if args.command == "spectrum" else "m"] = args.m
    try:
        cfg = RunConfig.from_sources(args.command, args.config, overrides, args.verbose)
        return COMMAND_HANDLERS[args.command](cfg)
    except BKSRegError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
