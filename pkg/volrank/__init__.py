"""Testing the maximal rank of the volatility matrix from high-frequency observations."""
import logging
import os
import sys

from volrank.models import EXIT_CONFIG, VolrankError
from volrank.util import get_logger, log_to_stdout

__version__ = "0.1.0"


def strtobool(strbool: str | bool | None) -> bool:
    """Convert str to bool."""
    if str(strbool).lower() in ["true", "1", "t", "y", "on", "yes"]:
        return True
    else:
        return False


volrank_dir = os.path.abspath(os.path.join(os.path.dirname(__file__), os.pardir))

# Set defaults from environment variables first
# Folders
if not log_to_stdout:
    logs_dir = os.environ.get("VOLRANK_LOGS") or os.path.join(volrank_dir, "logs")
    os.environ.setdefault("VOLRANK_LOGS", logs_dir)
out_dir = os.environ.get("VOLRANK_OUT") or os.path.join(volrank_dir, "out")

# Other
volrank_debug = strtobool(os.environ.get("VOLRANK_DEBUG")) or False
threads = int(os.environ.get("VOLRANK_THREADS") or 1)

volranklog = get_logger("volrank")


def _configure_logging(debug: bool) -> None:
    if debug:
        logging.basicConfig(
            level=logging.DEBUG,
            format="[%(asctime)s] :: %(levelname)s :: %(name)s :: %(module)s :: %(funcName)s :: %(lineno)d :: %(message)s",
        )
    else:
        logging.basicConfig(
            level=logging.INFO,
            format="[%(asctime)s] :: %(levelname)s :: %(name)s :: %(message)s",
        )


def main(argv: None | list[str] = None) -> int:
    """Run one subcommand and return its exit code."""
    from volrank.harness.commands import build_parser

    global volrank_debug
    if argv is None:
        argv = sys.argv[1:]  # Set argv to argv[1:] if not passed into main

    parser = build_parser()
    try:
        args = parser.parse_args(args=argv)
    except SystemExit as err:
        # argparse exits 2 on usage errors and 0 on --help
        return int(err.code or 0) if isinstance(err.code, int) else EXIT_CONFIG

    if args.debug:
        volrank_debug = True
    _configure_logging(volrank_debug)

    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    if args.threads < 1:
        volranklog.error(f"--threads must be at least 1, got {args.threads}")
        return EXIT_CONFIG

    try:
        volranklog.info(f"Running {args.command}")
        code: int = args.handler(args)
        return code
    except VolrankError as err:
        volranklog.error(f"{type(err).__name__}: {err}")
        return err.exit_code
    except KeyboardInterrupt:
        volranklog.info("Keyboard Interrupt!")
        return EXIT_CONFIG
