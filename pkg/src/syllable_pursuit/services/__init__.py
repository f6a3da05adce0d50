"""
Services module for syllable-pursuit

Signal frontend, event detection, clustering, templates, matching pursuit,
evaluation, synthetic corpora and the pipeline commands built on them.
Submodules are imported explicitly; only the error hierarchy is re-exported.
"""

from .pipeline_errors import (
    AllNoiseError,
    AnnotationRangeError,
    AudioDecodeError,
    ConfigurationError,
    DataError,
    DatasetLayoutError,
    EmptyAudioError,
    EmptyTemplateSetError,
    FingerprintMismatchError,
    InvariantViolationError,
    MissingGroundTruthError,
    NoEventsError,
    PipelineError,
    ShortWaveformError,
    StageError,
    SynthGridError,
    TemplateShapeError,
    UnsupportedEncodingError,
    UsageError,
)

__all__ = [
    "AllNoiseError",
    "AnnotationRangeError",
    "AudioDecodeError",
    "ConfigurationError",
    "DataError",
    "DatasetLayoutError",
    "EmptyAudioError",
    "EmptyTemplateSetError",
    "FingerprintMismatchError",
    "InvariantViolationError",
    "MissingGroundTruthError",
    "NoEventsError",
    "PipelineError",
    "ShortWaveformError",
    "StageError",
    "SynthGridError",
    "TemplateShapeError",
    "UnsupportedEncodingError",
    "UsageError",
]
