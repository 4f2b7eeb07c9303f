"""Logging configuration for splatlab applications.

Library modules only ever call `logging.getLogger(__name__)`; handlers
are installed once, by the application, through `setup_logging`.

"""

from __future__ import annotations

import logging
import logging.config
from pathlib import Path


# chatty at DEBUG: PIL reports every PNG chunk, matplotlib every font lookup
_NOISY_LIBRARIES = ("PIL", "matplotlib")


def setup_logging(default_level=logging.INFO, log_file: str | Path | None = None):
    """Routes the ``splatlab`` loggers to the console and, optionally, a file.

    Parameters
    ----------
    default_level : int
        Threshold of the ``splatlab`` logger and the console handler.
    log_file : path, optional
        When given, records of every level down to DEBUG are also appended
        to this file; its directory is created if needed.

    """
    handlers = {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "standard",
            "level": default_level,
        },
    }
    level = default_level
    if log_file is not None:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers["file"] = {
            "class": "logging.FileHandler",
            "formatter": "run",
            "filename": str(log_file),
            "encoding": "utf-8",
            "level": logging.DEBUG,
        }
        level = logging.DEBUG

    logging_config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "standard": {
                "format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
            },
            "run": {
                "format": "%(asctime)s\t%(levelname)s\t%(name)s\t%(message)s"
            },
        },
        "handlers": handlers,
        "root": {
            "handlers": ["console"],
            "level": logging.WARNING,
        },
        "loggers": {
            "splatlab": {
                "handlers": list(handlers),
                "level": level,
                "propagate": False,
            },
        } | {name: {"level": logging.WARNING} for name in _NOISY_LIBRARIES},
    }
    logging.config.dictConfig(logging_config)
