"""
Command-line entry point.

Maps every failure to the documented exit codes: 1 for invalid input
(configuration, states, CSV schema), 2 for solver or fit failure, 3 for I/O.
"""
import sys
from typing import List, Optional

from pydantic import ValidationError

from sagnac.cli.parser import build_parser
from sagnac.core.errors import SagnacError
from sagnac.core.logging import bind_run_context, clear_run_context, get_logger, setup_logging

logger = get_logger(__name__)

EXIT_VALIDATION = 1
EXIT_IO = 3


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are validation errors; --help and --version exit 0
        return EXIT_VALIDATION if exc.code else 0
    setup_logging(debug=args.debug)
    clear_run_context()
    bind_run_context(command=args.command)

    try:
        return args.handler(args)
    except SagnacError as exc:
        logger.error(
            f"{type(exc).__name__}: {exc.message}",
            extra={"extra_fields": {"exit_code": exc.exit_code, **exc.context}}
        )
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        logger.error(
            "Invalid configuration",
            extra={"extra_fields": {"errors": exc.errors(include_url=False)}}
        )
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        # TOML syntax errors and rejected parameter values
        logger.error(f"Invalid input: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        logger.error(f"I/O error: {exc}", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
