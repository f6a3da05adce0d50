"""
Synthetic corpus type definitions
"""

from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .signal_types import Spectrogram

PrototypeKind = Literal["ramp", "chevron", "harmonic"]


class SynthConfig(BaseModel):
    """Synthetic recording parameters (spectrogram domain, dB above floor)"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_prototypes: int = Field(default=6, ge=1)
    kinds: List[PrototypeKind] = Field(default_factory=lambda: ["ramp", "chevron", "harmonic"], min_length=1, description="Prototype kinds, cycled over prototype ids")
    proto_rows: int = Field(default=24, ge=8, description="Prototype height in frequency rows")
    proto_cols: int = Field(default=40, ge=4, description="Prototype width in time columns")
    n_freq: int = Field(default=64, ge=8, description="Grid rows")
    n_time: int = Field(default=7500, ge=1, description="Grid columns")
    n_events: int = Field(default=40, ge=0)
    min_gap: int = Field(default=20, ge=1, description="Silent columns between consecutive placements")
    noise_sigma: float = Field(default=4.0, ge=0, description="Gaussian noise in dB")
    freq_jitter: int = Field(default=0, ge=0, description="Maximum row shift of a placement from its prototype's base row")
    amplitude: float = Field(default=40.0, gt=0, description="Peak prototype level in dB above floor")
    min_distance: float = Field(default=1.0, ge=0, description="Minimum pairwise distance between prototypes")
    time_step: float = Field(default=0.004, gt=0, description="Seconds per column")
    freq_low_hz: float = Field(default=1000.0, gt=0)
    freq_high_hz: float = Field(default=12000.0, gt=0)
    db_floor: float = Field(default=-80.0, lt=0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_grid(self):
        """Validate prototype and grid sizes"""
        if self.proto_rows > self.n_freq:
            raise ValueError("proto_rows cannot exceed n_freq")
        if self.freq_high_hz <= self.freq_low_hz:
            raise ValueError("freq_high_hz must exceed freq_low_hz")
        return self


class SynthCorpusConfig(BaseModel):
    """Multi-individual synthetic corpus sharing one prototype bank"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    recording: SynthConfig = Field(default_factory=SynthConfig)
    n_individuals: int = Field(default=5, ge=1)
    recordings_per_individual: int = Field(default=10, ge=1)
    usage_concentration: float = Field(default=1.0, gt=0, description="Dirichlet concentration of per-individual prototype usage")
    seed: int = Field(default=0, ge=0)


@dataclass(frozen=True)
class Placement:
    """Prototype placed at (t, f), f being the bottom row of the prototype matrix"""
    prototype_id: int
    t: int
    f: int


@dataclass(frozen=True, eq=False)
class SynthTruth:
    """Rendered synthetic recording with its generating parameters"""
    prototypes: Tuple[np.ndarray, ...]
    placements: Tuple[Placement, ...]
    spectrogram: Spectrogram
    base_rows: Tuple[int, ...] = ()
    config: Optional[SynthConfig] = None


@dataclass(frozen=True, eq=False)
class SynthCorpus:
    """Synthetic recordings grouped by individual"""
    prototypes: Tuple[np.ndarray, ...]
    base_rows: Tuple[int, ...]
    recordings: Dict[str, List[Tuple[str, SynthTruth]]] = field(default_factory=dict)
    config: Optional[SynthCorpusConfig] = None
