"""
Configuration-related type definitions

Every section of the pipeline YAML file maps onto one of these models.
Unknown keys are rejected so typos never silently fall back to defaults.
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _StrictModel(BaseModel):
    """Base model rejecting unknown keys"""
    model_config = ConfigDict(extra="forbid", frozen=True)


class StftConfig(_StrictModel):
    """Short-time Fourier transform settings of the signal frontend"""
    window_size: int = Field(default=512, gt=0, description="Window length in samples")
    hop: int = Field(default=128, gt=0, description="Hop between frames in samples")
    window: Literal["hann"] = Field(default="hann", description="Taper identifier")
    db_floor: float = Field(default=-80.0, lt=0, description="Clip value in dB below the recording peak")
    log_freq_bins: Optional[int] = Field(default=None, gt=1, description="Log-frequency bin count (None keeps the linear axis)")
    freq_range: Optional[Tuple[float, float]] = Field(default=None, description="[low_hz, high_hz] crop applied before rebinning")

    @model_validator(mode="after")
    def validate_frames(self):
        """Validate hop/window relation and frequency range ordering"""
        if self.hop > self.window_size:
            raise ValueError("hop must not exceed window_size")
        if self.freq_range is not None:
            low, high = self.freq_range
            if low < 0 or high <= low:
                raise ValueError("freq_range must satisfy 0 <= low_hz < high_hz")
        return self


class DetectionConfig(_StrictModel):
    """Syllable event detection and patch extraction settings"""
    eta: float = Field(default=10.0, gt=0, description="Threshold in dB above the floor")
    box_time: int = Field(default=100, ge=1, description="Patch width in time steps")
    box_freq: int = Field(default=100, ge=1, description="Patch height in frequency bins")
    full_band: bool = Field(default=False, description="Patch spans every frequency row; box_freq ignored")
    min_pixels: int = Field(default=5, ge=1, description="Components with fewer cells are discarded")


class HdbscanConfig(_StrictModel):
    """HDBSCAN parameters"""
    min_cluster_size: int = Field(default=10, ge=2)
    max_cluster_size: int = Field(default=200, ge=2)
    min_samples: Optional[int] = Field(default=None, ge=1, description="Core-distance neighborhood (None = min_cluster_size)")
    cluster_selection_method: Literal["eom", "leaf"] = Field(default="eom")
    allow_single_cluster: bool = Field(default=False)

    @model_validator(mode="after")
    def validate_sizes(self):
        """Validate min/max cluster size relation"""
        if self.max_cluster_size < self.min_cluster_size:
            raise ValueError("max_cluster_size must be >= min_cluster_size")
        return self

    @property
    def effective_min_samples(self) -> int:
        """Neighborhood size used for core distances"""
        return self.min_samples if self.min_samples is not None else self.min_cluster_size


class MpConfig(_StrictModel):
    """Matching pursuit and refinement loop settings"""
    collar: Optional[int] = Field(default=None, ge=1, description="Peak separation in columns (None = half the median template duration)")
    min_rel_score: float = Field(default=0.2, gt=0, lt=1, description="Minimum decrease as a fraction of the template energy")
    max_iters_outer: int = Field(default=2, ge=1, description="Refinement rounds")
    freq_search: Optional[Tuple[int, int]] = Field(default=None, description="Inclusive row offset range searched (None = all valid)")
    freq_stride: int = Field(default=1, ge=1, description="Stride over frequency offsets")

    @model_validator(mode="after")
    def validate_freq_search(self):
        """Validate the frequency search range"""
        if self.freq_search is not None:
            low, high = self.freq_search
            if low < 0 or high < low:
                raise ValueError("freq_search must satisfy 0 <= low <= high")
        return self


class EvalConfig(_StrictModel):
    """Evaluation settings"""
    iou_min: float = Field(default=0.3, gt=0, le=1, description="Minimum interval IoU for a true positive")
    bos_bins: int = Field(default=10, ge=1, description="Log-spaced frequency bins of the bag of syllables")
    bos_band_hz: Tuple[float, float] = Field(default=(1000.0, 12000.0), description="Analysis band of the default BoS edges")
    bos_edges_hz: Optional[List[float]] = Field(default=None, description="Explicit BoS bin edges (overrides bins/band)")
    map_k: int = Field(default=5, ge=1, description="Cutoff of the mAP@k retrieval score")

    @model_validator(mode="after")
    def validate_band(self):
        """Validate BoS band and explicit edges"""
        low, high = self.bos_band_hz
        if low <= 0 or high <= low:
            raise ValueError("bos_band_hz must satisfy 0 < low < high")
        if self.bos_edges_hz is not None:
            edges = self.bos_edges_hz
            if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
                raise ValueError("bos_edges_hz must hold at least two strictly increasing values")
        return self


class PathsConfig(_StrictModel):
    """Dataset and output locations"""
    audio_root: str = Field(default="./data/audio", description="Recordings, one directory per individual")
    annotation_root: str = Field(default="./data/annotations", description="Ground-truth CSV files")
    output_root: str = Field(default="./output", description="Archives, annotations and reports")
    layout: Literal["flat", "bengalese_finch"] = Field(default="flat", description="Ground-truth file layout")


class PipelineConfig(_StrictModel):
    """Complete pipeline configuration"""
    stft: StftConfig = Field(default_factory=StftConfig)
    detect: DetectionConfig = Field(default_factory=DetectionConfig)
    hdbscan: HdbscanConfig = Field(default_factory=HdbscanConfig)
    split_hdbscan: Optional[HdbscanConfig] = Field(default=None, description="Override used by split_clusters only")
    merge_h: float = Field(default=0.33, ge=0, le=1, description="Complete-linkage merge threshold")
    mp: MpConfig = Field(default_factory=MpConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)
    mode: Literal["single", "multi"] = Field(default="multi")
    seed: int = Field(default=0, ge=0)
    support_minutes: float = Field(default=10.0, gt=0)

    @property
    def split_cluster_config(self) -> HdbscanConfig:
        """HDBSCAN settings used by the split stage"""
        return self.split_hdbscan or self.hdbscan
