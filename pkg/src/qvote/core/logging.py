"""
Loguru configuration for the simulator.

Every record carries the id of the election run that emitted it (see
``run_id_context``). Output goes to stderr, either as one JSON object per line
for batch sweeps or as human-readable text. ``QVOTE_LOG`` selects the level.

Logs are diagnostics only: nothing written here reaches a trace, a report or a
digest, so verbosity never changes simulation output.
"""

import json
import sys
import traceback
from typing import Any, TextIO

from loguru import logger

from qvote.config import Settings, settings
from qvote.core.trace_context import run_id_context

NO_RUN = "N/A"

# Keys of record["extra"] that get a top-level field of their own
_RESERVED_EXTRA = frozenset({"run_id"})


class JsonSink:
    """
    Sink writing one compact JSON object per log record.

    Values bound with ``logger.bind(...)`` other than the run id are grouped
    under ``context``.
    """

    def __init__(self, stream: TextIO = sys.stderr):
        self.stream = stream

    @staticmethod
    def _exception_block(exception: Any) -> dict[str, str]:
        exc_type, exc_value, exc_traceback = exception
        return {
            "type": exc_type.__name__ if exc_type else "Unknown",
            "value": str(exc_value) if exc_value else "",
            "traceback": "".join(
                traceback.format_exception(exc_type, exc_value, exc_traceback)
            ),
        }

    def write(self, message: Any) -> None:
        """
        Serialize a loguru message.

        Args:
            message: Loguru message object (exposes ``.record``)
        """
        record = message.record
        extra = record["extra"]
        entry: dict[str, Any] = {
            "timestamp": record["time"].strftime("%Y-%m-%d %H:%M:%S.%f")[:-3],
            "level": record["level"].name,
            "run_id": extra.get("run_id", NO_RUN),
            "name": record["name"],
            "function": record["function"],
            "line": record["line"],
            "message": record["message"],
        }
        context = {k: v for k, v in extra.items() if k not in _RESERVED_EXTRA}
        if context:
            entry["context"] = context
        if record["exception"] is not None:
            entry["exception"] = self._exception_block(record["exception"])

        line = json.dumps(entry, ensure_ascii=False, default=str)
        self.stream.write(line + "\n")
        self.stream.flush()


def add_run_id(record: dict[str, Any]) -> bool:
    """
    Loguru filter stamping the current run id on a record.

    Args:
        record: Loguru record

    Returns:
        Always True (the filter never drops records)
    """
    record["extra"]["run_id"] = run_id_context.get() or NO_RUN
    return True


def get_log_format() -> str:
    """Human-readable format string, run id included."""
    return (
        "{time:YYYY-MM-DD HH:mm:ss.SSS} | "
        "{level: <8} | "
        "run={extra[run_id]} | "
        "{name}:{function}:{line} - {message}"
    )


def configure_logger(config: Settings | None = None) -> None:
    """
    Replace loguru's handlers with a single stderr handler.

    The CLI calls this again with fresh settings so that ``QVOTE_LOG`` and
    ``QVOTE_LOG_FORMAT`` changes made after import take effect.

    Args:
        config: Settings to apply (defaults to the module-level settings)
    """
    active = config or settings
    logger.remove()

    common: dict[str, Any] = {
        "level": active.get_log_level(),
        "filter": add_run_id,
        "colorize": False,
        "backtrace": True,
        "diagnose": False,
        "enqueue": active.logger_enqueue,
    }
    if active.log_format.lower() == "json":
        logger.add(JsonSink(sys.stderr).write, format="{message}", **common)
    else:
        logger.add(sys.stderr, format=get_log_format(), **common)


configure_logger()


__all__ = ["logger", "configure_logger", "JsonSink", "add_run_id", "get_log_format"]
