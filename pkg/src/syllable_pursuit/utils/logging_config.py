"""
Logging configuration with millisecond precision

Provides structured logging with both JSON and text formats on top of the
standard library handlers. Console output goes to stderr so that stdout
stays free for command results.
"""

import logging
import logging.handlers
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import orjson
import structlog

from ..config.settings import Settings, settings as default_settings

ROOT_LOGGER_NAME = "syllable_pursuit"


class MillisecondFormatter(logging.Formatter):
    """Formatter that includes milliseconds in timestamps"""

    def formatTime(self, record, datefmt=None):
        dt = datetime.fromtimestamp(record.created)
        return dt.strftime('%Y-%m-%d %H:%M:%S.%f')[:-3]


class JSONFormatter(logging.Formatter):
    """JSON-lines formatter with millisecond precision"""

    def format(self, record):
        dt = datetime.fromtimestamp(record.created)
        log_entry: Dict[str, Any] = {
            "timestamp": dt.strftime('%Y-%m-%d %H:%M:%S.%f')[:-3],
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)
        return orjson.dumps(log_entry, default=str).decode("utf-8")


def setup_logging(config: Optional[Settings] = None, level: Optional[str] = None) -> structlog.stdlib.BoundLogger:
    """
    Setup logging configuration with millisecond precision

    Args:
        config: Process settings (defaults to the global settings)
        level: Optional level overriding the configured one

    Returns:
        Configured structlog logger
    """
    config = config or default_settings
    log_level = getattr(logging, (level or config.log_level).upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    if config.log_format == "json":
        formatter: logging.Formatter = JSONFormatter()
    else:
        formatter = MillisecondFormatter(
            fmt='%(asctime)s [%(levelname)8s] %(name)s: %(message)s'
        )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if config.log_file:
        try:
            Path(config.log_file).parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                config.log_file,
                maxBytes=config.log_max_bytes,
                backupCount=config.log_backup_count,
                encoding='utf-8'
            )
            file_handler.setLevel(log_level)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
        except OSError as error:
            root_logger.warning("Could not create file handler for %s: %s", config.log_file, error)

    renderer = (
        structlog.processors.JSONRenderer(serializer=lambda obj, **kw: orjson.dumps(obj, default=str).decode("utf-8"))
        if config.log_format == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            renderer,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )

    logger = structlog.get_logger(ROOT_LOGGER_NAME)
    logger.debug(
        "Logging configured",
        log_level=logging.getLevelName(log_level),
        log_format=config.log_format,
        log_file=config.log_file,
    )
    return logger


def get_logger(name: str = ROOT_LOGGER_NAME) -> structlog.stdlib.BoundLogger:
    """
    Get a configured logger instance

    Args:
        name: Logger name

    Returns:
        structlog logger bound to ``name``
    """
    return structlog.get_logger(name)
