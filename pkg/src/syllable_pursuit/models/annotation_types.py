"""
Annotation and evaluation type definitions
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

EMPTY_LABEL = "<empty>"


class Detection(BaseModel):
    """One matching-pursuit placement"""
    model_config = ConfigDict(frozen=True)

    template_id: int = Field(..., description="Template placed")
    t: int = Field(..., ge=0, description="Time-step index of the placement left edge")
    f: int = Field(default=0, ge=0, description="Frequency-row index of the placement bottom edge")
    score: float = Field(..., gt=0, description="Residual energy decrease achieved by this placement (dB^2)")
    onset_s: float = Field(..., description="Start of the template's active columns in seconds")
    offset_s: float = Field(..., description="End of the template's active columns in seconds")
    low_hz: float = Field(..., description="Frequency of the lowest active template row")
    high_hz: float = Field(..., description="Frequency of the highest active template row")
    rank: int = Field(default=0, ge=0, description="Acceptance order within the decomposition")
    round: int = Field(default=0, ge=0, description="Greedy round that accepted the placement")

    @property
    def midpoint_s(self) -> float:
        return 0.5 * (self.onset_s + self.offset_s)

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.low_hz + self.high_hz)


class AnnotationSequence(BaseModel):
    """Ordered detections of one recording"""
    recording_id: str = Field(..., description="Recording identifier")
    detections: List[Detection] = Field(default_factory=list, description="Detections sorted by t")
    residual_norm: float = Field(default=0.0, ge=0, description="Final residual L2 norm")
    signal_norm: Optional[float] = Field(default=None, ge=0, description="L2 norm of the decomposed signal")
    fingerprint: Optional[str] = Field(default=None, description="Configuration fingerprint")

    @model_validator(mode="after")
    def validate_order(self):
        """Validate time ordering and the residual bound"""
        times = [det.t for det in self.detections]
        if times != sorted(times):
            raise ValueError("detections must be sorted by t")
        if self.signal_norm is not None and self.residual_norm > self.signal_norm * (1 + 1e-9):
            raise ValueError("residual_norm cannot exceed the signal norm")
        return self

    def __len__(self) -> int:
        return len(self.detections)


class GroundTruthEvent(BaseModel):
    """Human syllable annotation"""
    model_config = ConfigDict(frozen=True)

    onset: float = Field(..., description="Onset in seconds")
    offset: float = Field(..., description="Offset in seconds")
    label: str = Field(..., description="Syllable class")

    @model_validator(mode="after")
    def validate_interval(self):
        if not self.onset < self.offset:
            raise ValueError("onset must precede offset")
        return self


class LabelMap(BaseModel):
    """Template id to ground-truth label correspondence"""
    mapping: Dict[int, str] = Field(default_factory=dict)

    def __getitem__(self, template_id: int) -> str:
        return self.mapping.get(template_id, EMPTY_LABEL)

    @classmethod
    def identity(cls, template_ids: List[int]) -> "LabelMap":
        """Map each template id onto its own string form"""
        return cls(mapping={tid: str(tid) for tid in template_ids})


class DetectionScores(BaseModel):
    """Detection precision and recall (None when undefined)"""
    precision: Optional[float] = None
    recall: Optional[float] = None
    true_positives: int = 0
    n_detections: int = 0
    n_ground_truth: int = 0


class ClassificationScores(BaseModel):
    """Class-aware precision/recall"""
    micro_precision: Optional[float] = None
    weighted_precision: Optional[float] = None
    weighted_recall: Optional[float] = None


class RetrievalScores(BaseModel):
    """Retrieval mean average precision"""
    map: Optional[float] = None
    map_at_k: Optional[float] = None
    k: Optional[int] = None
    skipped_queries: List[int] = Field(default_factory=list, description="Queries whose label has a single member")


@dataclass(frozen=True, eq=False)
class BosVector:
    """Bag-of-syllables counts of one song, indexed [template, frequency bin]"""
    counts: np.ndarray
    template_ids: Tuple[int, ...]
    edges_hz: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        """Flattened counts"""
        return self.counts.ravel().astype(np.float64)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class OccurrenceProfile:
    """Relative template occurrences, rows are individuals"""
    individuals: Tuple[str, ...]
    template_ids: Tuple[int, ...]
    frequencies: np.ndarray
    empty_rows: Tuple[str, ...] = ()
