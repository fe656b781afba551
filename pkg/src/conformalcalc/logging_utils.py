from __future__ import annotations

import logging
import sys


def configure_logging(*, verbose: bool, quiet: bool) -> None:
    """
    Configure process-wide logging for the command line.

    - Default: INFO
    - --verbose: DEBUG
    - --quiet: WARNING

    Records go to stderr so JSON reports on stdout stay machine-readable.
    """

    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    else:
        level = logging.INFO

    fmt = "conformal-calc: %(message)s"
    if verbose:
        fmt = "conformal-calc [%(levelname)s] %(name)s: %(message)s"

    logging.basicConfig(level=level, format=fmt, stream=sys.stderr, force=True)
