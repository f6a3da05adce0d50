"""
Storage-related type definitions
"""

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

ARCHIVE_FORMAT_VERSION = 1


class TemplateEntry(BaseModel):
    """One template of an archive manifest"""
    id: int = Field(..., description="Template id")
    support: int = Field(..., ge=1, description="Member event count")
    duration: int = Field(..., ge=0, description="Active time columns")
    file: str = Field(..., description="Blob file name, relative to the archive directory")
    provenance: List[int] = Field(default_factory=list, description="Contributing cluster ids")


class StageCounts(BaseModel):
    """Template counts along the fitting stages"""
    n_events: int = Field(..., description="Event patches clustered")
    initial_clusters: int = Field(..., description="Clusters after initial clustering")
    split_clusters: int = Field(..., description="Clusters after split")
    before_merge: int = Field(..., description="Templates before merging")
    after_merge: int = Field(..., description="Templates after merging")


class ArchiveManifest(BaseModel):
    """Template archive manifest"""
    format_version: int = Field(default=ARCHIVE_FORMAT_VERSION)
    fingerprint: str = Field(..., description="Configuration fingerprint")
    shape: Tuple[int, int] = Field(..., description="Template shape (rows, cols)")
    dtype: str = Field(default="<f4", description="Blob element type, row-major")
    counts: Optional[StageCounts] = Field(default=None, description="Fitting stage counts")
    templates: List[TemplateEntry] = Field(default_factory=list)


class MetricsRow(BaseModel):
    """Table row of one individual (or the average)"""
    individual: str
    detection_precision: Optional[float] = None
    detection_recall: Optional[float] = None
    micro_precision: Optional[float] = None
    weighted_precision: Optional[float] = None
    weighted_recall: Optional[float] = None
    n_templates: Optional[float] = None
    n_gt_syllables: Optional[int] = Field(default=None, description="Distinct ground-truth syllable classes")
    n_detections: Optional[int] = None
    n_gt_events: Optional[int] = None


class BosBlock(BaseModel):
    """Bag-of-syllables retrieval results"""
    map: Optional[float] = None
    map_at_k: Optional[float] = None
    k: int
    skipped_queries: List[str] = Field(default_factory=list, description="Recording ids whose individual has one song")
    n_songs: int


class OccurrenceBlock(BaseModel):
    """Relative template occurrences per individual"""
    individuals: List[str]
    template_ids: List[int]
    frequencies: List[List[float]]
    empty_rows: List[str] = Field(default_factory=list)


class MetricsReport(BaseModel):
    """Evaluation report document"""
    fingerprint: str
    mode: str
    seed: int
    support_minutes: float
    iou_min: float
    rows: List[MetricsRow] = Field(default_factory=list)
    average: MetricsRow
    bos: Optional[BosBlock] = None
    occurrence_profile: Optional[OccurrenceBlock] = None
    template_sharing: Optional[float] = None


class SweepCell(BaseModel):
    """Mean and standard deviation of one metric over seeds"""
    mean: Optional[float] = None
    std: Optional[float] = None


class SweepEntry(BaseModel):
    """Aggregated results of one support size"""
    support_minutes: float
    seeds: List[int]
    rows: Dict[str, Dict[str, SweepCell]] = Field(default_factory=dict, description="individual -> metric -> cell")
    average: Dict[str, SweepCell] = Field(default_factory=dict)
    median_templates: Optional[float] = None


class SweepSummary(BaseModel):
    """Support-size sweep results"""
    fingerprint: str
    mode: str
    entries: List[SweepEntry] = Field(default_factory=list)
