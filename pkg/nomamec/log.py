from __future__ import annotations

import logging
import os

from rich.logging import RichHandler

_configured = False


def configure(level: str | int | None = None) -> None:
    """Attach a single RichHandler to the package logger."""
    global _configured
    root = logging.getLogger("nomamec")
    lvl = level if level is not None else os.environ.get("NOMAMEC_LOG_LEVEL", "WARNING")
    root.setLevel(lvl.upper() if isinstance(lvl, str) else lvl)
    if not _configured:
        handler = RichHandler(show_path=False, rich_tracebacks=False, markup=False)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        root.addHandler(handler)
        root.propagate = False
        _configured = True


def get_logger(name: str) -> logging.Logger:
    if not _configured:
        configure()
    return logging.getLogger(name if name.startswith("nomamec") else f"nomamec.{name}")
