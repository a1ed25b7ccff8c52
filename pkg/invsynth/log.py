"""
log.py

One stderr handler for the whole package. Modules do

    log = get_logger(__name__)

and write tagged messages such as "[reduce] level 'k': 4 instances".
"""

import logging
import sys

from invsynth.config import LOG_LEVEL

_FORMAT = "%(levelname)-7s %(message)s"
_configured = False


def configure(level: str | int | None = None) -> None:
    global _configured
    root = logging.getLogger("invsynth")
    if not _configured:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    if isinstance(level, str):
        level = level.upper()
    root.setLevel(level if level is not None else LOG_LEVEL)


def get_logger(name: str) -> logging.Logger:
    if not _configured:
        configure()
    return logging.getLogger(name)
