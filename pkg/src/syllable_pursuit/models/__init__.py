"""
Type definitions for syllable-pursuit

Pydantic models for configuration and records, frozen dataclasses for
array-backed values.
"""

from .annotation_types import (
    EMPTY_LABEL,
    AnnotationSequence,
    BosVector,
    ClassificationScores,
    Detection,
    DetectionScores,
    GroundTruthEvent,
    LabelMap,
    OccurrenceProfile,
    RetrievalScores,
)
from .cluster_types import NOISE_LABEL, ClusterAssignment, FitCounts, PcaModel, Template, TemplateSet
from .config_types import (
    DetectionConfig,
    EvalConfig,
    HdbscanConfig,
    MpConfig,
    PathsConfig,
    PipelineConfig,
    StftConfig,
)
from .signal_types import Spectrogram, SyllableEvent, Waveform
from .synth_types import Placement, SynthConfig, SynthCorpus, SynthCorpusConfig, SynthTruth

__all__ = [
    # Config types
    "StftConfig",
    "DetectionConfig",
    "HdbscanConfig",
    "MpConfig",
    "EvalConfig",
    "PathsConfig",
    "PipelineConfig",

    # Signal types
    "Waveform",
    "Spectrogram",
    "SyllableEvent",

    # Cluster types
    "NOISE_LABEL",
    "PcaModel",
    "ClusterAssignment",
    "Template",
    "TemplateSet",
    "FitCounts",

    # Annotation types
    "EMPTY_LABEL",
    "Detection",
    "AnnotationSequence",
    "GroundTruthEvent",
    "LabelMap",
    "DetectionScores",
    "ClassificationScores",
    "RetrievalScores",
    "BosVector",
    "OccurrenceProfile",

    # Synthetic corpus types
    "SynthConfig",
    "SynthCorpusConfig",
    "Placement",
    "SynthTruth",
    "SynthCorpus",
]
