# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Rich logging and progress bars sharing one stderr console."""
import logging
import os

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import Progress
from rich.traceback import install

from worldprobe.exceptions import ConfigError

__all__ = ["init", "resolve_level", "progress", "console", "LEVEL_ENV"]

LEVEL_ENV = "WORLDPROBE_LOG_LEVEL"

# shared by log records and progress bars
console = Console(stderr=True)


def resolve_level(verbose: bool = False) -> int:
    """
    DEBUG when verbose, else the level named by ``WORLDPROBE_LOG_LEVEL``, else INFO.

    :raises ConfigError: if the variable names no logging level.
    """

    if verbose:
        return logging.DEBUG

    name = os.environ.get(LEVEL_ENV, "INFO").strip().upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ConfigError(f"{LEVEL_ENV}={name!r} is not a logging level.")
    return level


def progress(enabled: bool = True, **kwargs) -> Progress:
    return Progress(transient=True, disable=not enabled, console=console, **kwargs)


def init(verbose=False):
    level = resolve_level(verbose)
    install(suppress=[click], console=console)

    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[
            RichHandler(console=console,
                        rich_tracebacks=True,
                        markup=True,
                        enable_link_path=False)
        ],
    )

    # basicConfig is a no-op once the root logger has handlers
    logging.getLogger("worldprobe").setLevel(level)
    logging.getLogger("multiprocess").setLevel(logging.WARNING)
