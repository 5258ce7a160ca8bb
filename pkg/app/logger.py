# app/logger.py
import sys
import time

from app.config import READOUT_LOG_LEVEL

_LEVELS = {"DEBUG": 10, "INFO": 20, "SUCCESS": 25, "WARNING": 30, "ERROR": 40}

_PREFIX = {
    "INFO": "ℹ️",
    "SUCCESS": "✅",
    "ERROR": "❌",
    "WARNING": "⚠️",
    "DEBUG": "🔍",
}


def log(message: str, level: str = "INFO"):
    """Timestamped progress line on stderr (stdout is reserved for tables)."""
    if _LEVELS.get(level, 20) < _LEVELS.get(READOUT_LOG_LEVEL, 20):
        return
    timestamp = time.strftime("%H:%M:%S")
    prefix = _PREFIX.get(level, "")
    print(f"[{timestamp}] {prefix} {message}", file=sys.stderr, flush=True)
