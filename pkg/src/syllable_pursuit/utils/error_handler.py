"""
Error handling utilities
"""

import traceback
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

from ..services.pipeline_errors import PipelineError
from .logging_config import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class ErrorReport(BaseModel):
    """Structured description of a failed command"""
    success: bool = False
    message: str
    code: str
    exit_code: int
    error: Optional[str] = None
    context: Dict[str, Any] = Field(default_factory=dict)


class ErrorHandler:
    """Maps exceptions to exit codes and logs them"""

    @staticmethod
    def exit_code_for(exc: BaseException) -> int:
        """Exit code reported for an exception"""
        if isinstance(exc, PipelineError):
            return exc.exit_code
        if isinstance(exc, SystemExit):
            return EXIT_USAGE
        return EXIT_INTERNAL

    @staticmethod
    def create_error_report(exc: BaseException, debug: bool = False) -> ErrorReport:
        """Create standardized error report"""
        context = {
            key: getattr(exc, key)
            for key in ("path", "source", "stage", "invariant", "detail")
            if getattr(exc, key, None) is not None
        }
        return ErrorReport(
            message=str(exc) or exc.__class__.__name__,
            code=getattr(exc, "error_code", None) or "INTERNAL_ERROR",
            exit_code=ErrorHandler.exit_code_for(exc),
            error=traceback.format_exc() if debug else None,
            context=context,
        )

    @staticmethod
    def handle_exception(exc: BaseException, debug: bool = False) -> int:
        """Log the exception and return the process exit code"""
        report = ErrorHandler.create_error_report(exc, debug)
        if isinstance(exc, PipelineError):
            logger.error(report.message, code=report.code, exit_code=report.exit_code, **report.context)
        else:
            logger.exception("Unexpected error", code=report.code, exit_code=report.exit_code)
        if report.error:
            logger.debug("Traceback", traceback=report.error)
        return report.exit_code
