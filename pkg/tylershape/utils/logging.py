"""Logging configuration for tylershape"""

import json
import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar

from tylershape.config import settings

_run_id: ContextVar[str] = ContextVar("run_id", default="-")


class RunContextFilter(logging.Filter):
    """Stamp every record with the id of the benchmark run that produced it"""

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_id = _run_id.get()
        return True


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        log_obj = {
            "timestamp": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
            "run_id": getattr(record, "run_id", "-"),
        }
        if record.exc_info:
            log_obj["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_obj)


def current_run_id() -> str:
    return _run_id.get()


@contextmanager
def run_context(run_id: str) -> Iterator[str]:
    """Attach run_id to all log records emitted inside the block"""
    token = _run_id.set(run_id)
    try:
        yield run_id
    finally:
        _run_id.reset(token)


def setup_logging(level: str | None = None) -> None:
    """Configure logging for the library and the bench CLI"""

    if settings.log_format == "json":
        formatter: logging.Formatter = JsonFormatter()
    else:
        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - [%(run_id)s] %(message)s"
        )

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level or settings.log_level))

    # Clear any existing handlers
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)
    console_handler.addFilter(RunContextFilter())
    root_logger.addHandler(console_handler)

    # Reduce noise from third-party libraries
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)

    root_logger.debug("Logging configured", extra={
        "log_level": level or settings.log_level,
        "log_format": settings.log_format,
    })
