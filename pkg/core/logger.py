# core/logger.py
import logging
import os
import sys
from logging.handlers import RotatingFileHandler

_configured = False
_run_handlers: dict[str, logging.Handler] = {}

LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"


def _level() -> int:
    return getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO)


def setup_logging():
    global _configured
    if _configured:
        return

    log_to_file = os.getenv("LOG_TO_FILE", "false").lower() == "true"
    log_file = os.getenv("LOG_FILE", os.path.join(os.getenv("OUTPUT_DIR", "output"), "sle_splitting.log"))
    log_max_bytes = int(os.getenv("LOG_MAX_BYTES", str(2 * 1024 * 1024)))
    log_backups = int(os.getenv("LOG_BACKUPS", "3"))
    log_to_stdout = os.getenv("LOG_TO_STDOUT", "true").lower() == "true"

    root = logging.getLogger()
    root.setLevel(_level())
    formatter = logging.Formatter(LOG_FORMAT)

    # pytest and notebooks install their own handlers
    if not root.handlers:
        if log_to_stdout:
            ch = logging.StreamHandler(sys.stdout)
            ch.setLevel(_level())
            ch.setFormatter(formatter)
            root.addHandler(ch)

        if log_to_file:
            try:
                os.makedirs(os.path.dirname(log_file) or ".", exist_ok=True)
                fh = RotatingFileHandler(log_file, maxBytes=log_max_bytes, backupCount=log_backups)
                fh.setLevel(_level())
                fh.setFormatter(formatter)
                root.addHandler(fh)
            except Exception as e:
                root.warning("Failed to initialize file logging: %s", e)

    _configured = True


def set_level(level: str) -> None:
    """Override the configured level, e.g. from a CLI flag."""
    setup_logging()
    value = getattr(logging, level.upper(), logging.INFO)
    root = logging.getLogger()
    root.setLevel(value)
    for handler in root.handlers:
        handler.setLevel(value)


def attach_run_log(out_dir: str, name: str) -> str:
    """
    Mirror all records into <out_dir>/<name>.log next to the experiment's
    CSV files. Attaching the same path twice is a no-op.
    """
    setup_logging()
    path = os.path.join(out_dir, f"{name}.log")
    if path in _run_handlers:
        return path
    os.makedirs(out_dir, exist_ok=True)
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setLevel(logging.getLogger().level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(handler)
    _run_handlers[path] = handler
    return path


def detach_run_log(path: str) -> None:
    handler = _run_handlers.pop(path, None)
    if handler is not None:
        logging.getLogger().removeHandler(handler)
        handler.close()


def get_logger(name: str | None = None) -> logging.Logger:
    setup_logging()
    return logging.getLogger(name)
