# Standard Library Imports
import sys
from typing import List, Optional

# Local Application Imports
from src.cli import build_parser, run_command
from src.common import Config, logger


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse the command line, load the configuration and run the requested command.

    Args:
        argv (Optional[List[str]]): Arguments without the program name; sys.argv when omitted.

    Returns:
        int: Process exit code.
    """
    args = build_parser().parse_args(argv)
    config = Config.get()
    logger.debug(f"Running command {args.command} on {args.case}")
    return run_command(args, config)


if __name__ == "__main__":
    sys.exit(main())
