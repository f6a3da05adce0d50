"""
Utility module for syllable-pursuit

Logging configuration, CLI error handling and the bounded worker pool.
"""

from .error_handler import ErrorHandler, ErrorReport
from .logging_config import JSONFormatter, MillisecondFormatter, get_logger, setup_logging
from .worker_pool import ordered_map

__all__ = [
    "ErrorHandler",
    "ErrorReport",
    "JSONFormatter",
    "MillisecondFormatter",
    "get_logger",
    "ordered_map",
    "setup_logging",
]
