"""Structured logging with run tracking.

- Uses standard library `logging`.
- Level from LSI_FORGE_LOG_LEVEL until the CLI applies `Settings.log_level`.
- Every record carries the id of the verification run that produced it.
- Logs go to stderr so stdout stays free for report summaries.
"""

from __future__ import annotations

import logging
import os
import sys
import uuid
from contextvars import ContextVar
from functools import lru_cache
from typing import Any, Optional

_run_id: ContextVar[Optional[str]] = ContextVar("run_id", default=None)


def _get_level() -> int:
    level = os.getenv("LSI_FORGE_LOG_LEVEL", "INFO").upper()
    return getattr(logging, level, logging.INFO)


class RunIdFilter(logging.Filter):
    """Add run_id to log records."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_id = _run_id.get() or "-"
        return True


@lru_cache(maxsize=1)
def configure_logging() -> None:
    """Install one stderr handler on the package logger."""
    package_logger = logging.getLogger("lsi_forge")
    package_logger.setLevel(_get_level())
    package_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.addFilter(RunIdFilter())
    console_handler.setFormatter(
        logging.Formatter(
            fmt="%(asctime)s [%(run_id)s] %(levelname)-8s [%(name)s] %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    )
    package_logger.addHandler(console_handler)
    package_logger.propagate = False


def set_level(level: str) -> None:
    """Change the package log level after configuration."""
    configure_logging()
    logging.getLogger("lsi_forge").setLevel(getattr(logging, level.upper(), logging.INFO))


def get_logger(name: str) -> logging.Logger:
    """Get a logger under the configured package logger."""
    configure_logging()
    return logging.getLogger(name)


def set_run_id(run_id: Optional[str] = None) -> str:
    """Set the run id for the current context."""
    if run_id is None:
        run_id = uuid.uuid4().hex[:12]
    _run_id.set(run_id)
    return run_id


def clear_run_id() -> None:
    _run_id.set(None)


def kv(**fields: Any) -> str:
    """Render simple key=value pairs for logs."""
    parts = [f"{k}={v!r}" for k, v in fields.items()]
    return " ".join(parts)
