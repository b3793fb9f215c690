"""
Structured logging for simulator runs.

Every record leaving the handler is stamped with the run context (command,
seed, output directory) so that JSON lines from several runs can be told apart
after the fact. Records go to stderr; stdout is reserved for reports.
"""
import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict


class RunContextFilter(logging.Filter):
    """Attach the current run context to each record."""

    def __init__(self):
        super().__init__()
        self.context: Dict[str, Any] = {}

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_context = dict(self.context)
        return True


_run_context = RunContextFilter()


class JSONFormatter(logging.Formatter):
    """One JSON object per record."""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        run_context = getattr(record, "run_context", None)
        if run_context:
            log_data["run"] = run_context

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        if hasattr(record, "extra_fields"):
            log_data.update(record.extra_fields)

        # numpy integers and paths fall back to str
        return json.dumps(log_data, default=str)


class DebugFormatter(logging.Formatter):
    """Human-readable lines with the command and any extra fields appended."""

    def __init__(self):
        super().__init__("%(asctime)s - %(name)s - %(levelname)s - %(message)s", datefmt="%H:%M:%S")

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        command = getattr(record, "run_context", {}).get("command")
        if command:
            line = f"[{command}] {line}"
        extra = getattr(record, "extra_fields", None)
        if extra:
            line += " " + " ".join(f"{key}={value}" for key, value in extra.items())
        return line


def bind_run_context(**fields: Any) -> None:
    """Add or replace run context fields on every subsequent record."""
    _run_context.context.update(fields)


def clear_run_context() -> None:
    _run_context.context.clear()


def setup_logging(debug: bool = False) -> None:
    """
    Configure simulator logging.

    Safe to call more than once; the handler is replaced and the bound run
    context is kept.

    Args:
        debug: If True, set log level to DEBUG and use the human format
    """
    log_level = logging.DEBUG if debug else logging.INFO

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.addFilter(_run_context)
    console_handler.setFormatter(DebugFormatter() if debug else JSONFormatter())
    root_logger.addHandler(console_handler)

    # RuntimeWarnings from numpy/scipy end up in the same stream
    logging.captureWarnings(True)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a module.

    Args:
        name: Logger name (typically __name__)

    Returns:
        Logger instance
    """
    return logging.getLogger(name)
