"""
Pipeline error classes

Every error carries a stable ``error_code`` and the process exit code the
CLI reports for it: 1 usage error, 2 data error, 3 internal invariant
violation.
"""

from pathlib import Path
from typing import Optional, Union

PathLike = Union[str, Path]


class PipelineError(Exception):
    """Base pipeline error class"""

    exit_code: int = 3

    def __init__(self, message: str, error_code: str = "PIPELINE_ERROR"):
        super().__init__(message)
        self.error_code = error_code


class UsageError(PipelineError):
    """Invalid invocation or configuration"""

    exit_code = 1

    def __init__(self, message: str, error_code: str = "USAGE_ERROR"):
        super().__init__(message, error_code)


class ConfigurationError(UsageError):
    """Configuration file missing, unparsable or invalid"""

    def __init__(self, message: str, path: Optional[PathLike] = None):
        super().__init__(message, "CONFIGURATION_ERROR")
        self.path = str(path) if path is not None else None


class DataError(PipelineError):
    """Input data cannot be processed"""

    exit_code = 2

    def __init__(self, message: str, error_code: str = "DATA_ERROR"):
        super().__init__(message, error_code)


class _FileDataError(DataError):
    """Data error tied to one file"""

    default_code = "FILE_ERROR"

    def __init__(self, path: PathLike, detail: str):
        super().__init__(f"{path}: {detail}", self.default_code)
        self.path = str(path)
        self.detail = detail


class AudioDecodeError(_FileDataError):
    """Audio file missing or unreadable"""
    default_code = "AUDIO_UNREADABLE"


class UnsupportedEncodingError(_FileDataError):
    """Audio file is not PCM WAV with a supported sample encoding"""
    default_code = "AUDIO_UNSUPPORTED_ENCODING"


class EmptyAudioError(_FileDataError):
    """Audio file holds no samples"""
    default_code = "AUDIO_EMPTY"


class ShortWaveformError(DataError, ValueError):
    """Waveform shorter than one analysis window"""

    def __init__(self, n_samples: int, window_size: int):
        super().__init__(
            f"Waveform of {n_samples} samples is shorter than one window ({window_size} samples)",
            "WAVEFORM_TOO_SHORT",
        )
        self.n_samples = n_samples
        self.window_size = window_size


class TemplateShapeError(DataError, ValueError):
    """Template shapes are inconsistent with each other or with a signal"""

    def __init__(self, message: str):
        super().__init__(message, "TEMPLATE_SHAPE")


class StageError(DataError):
    """A pipeline stage produced nothing usable"""

    default_code = "STAGE_FAILED"

    def __init__(self, stage: str, detail: str):
        super().__init__(f"[{stage}] {detail}", self.default_code)
        self.stage = stage
        self.detail = detail


class NoEventsError(StageError):
    """Detection found no syllable events"""
    default_code = "NO_EVENTS"


class AllNoiseError(StageError):
    """Clustering labeled every event as noise"""
    default_code = "ALL_NOISE"


class EmptyTemplateSetError(StageError):
    """Every template was filtered or merged away"""
    default_code = "EMPTY_TEMPLATE_SET"


class FingerprintMismatchError(DataError):
    """Archive or annotation was produced with different STFT/detection settings"""

    def __init__(self, expected: str, found: str, source: PathLike):
        super().__init__(
            f"{source}: fingerprint {found} does not match configuration fingerprint {expected}",
            "FINGERPRINT_MISMATCH",
        )
        self.expected = expected
        self.found = found
        self.source = str(source)


class MissingGroundTruthError(_FileDataError):
    """A listed recording has no ground-truth file"""
    default_code = "GROUND_TRUTH_MISSING"


class DatasetLayoutError(_FileDataError):
    """Dataset directory does not follow the expected layout"""
    default_code = "DATASET_LAYOUT"


class AnnotationRangeError(DataError, ValueError):
    """Annotation references times outside the spectrogram"""

    def __init__(self, message: str):
        super().__init__(message, "ANNOTATION_OUT_OF_RANGE")


class SynthGridError(DataError, ValueError):
    """Synthetic grid cannot hold the requested events"""

    def __init__(self, message: str):
        super().__init__(message, "SYNTH_GRID_TOO_SMALL")


class InvariantViolationError(PipelineError):
    """A runtime invariant check failed"""

    exit_code = 3

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"Invariant '{invariant}' violated: {detail}", "INVARIANT_VIOLATION")
        self.invariant = invariant
        self.detail = detail
