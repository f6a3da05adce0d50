"""
Signal-related type definitions

Array-carrying value types are frozen dataclasses: they hold numpy arrays,
which pydantic models would copy and validate on every construction.
"""

from dataclasses import dataclass, field
from typing import Literal, Tuple

import numpy as np

FrequencyScale = Literal["linear", "log"]


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono recording with samples in [-1, 1]"""
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("Waveform samples must be a non-empty 1-D array")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        """Duration in seconds"""
        return self.samples.size / self.sample_rate


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """dB-scaled time-frequency matrix ``[n_freq x n_time]``"""
    values: np.ndarray
    time_step: float
    freq_axis: np.ndarray
    db_floor: float
    scale: FrequencyScale = "linear"

    def __post_init__(self):
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            raise ValueError("Spectrogram values must be a non-empty 2-D array")
        if self.freq_axis.shape != (self.values.shape[0],):
            raise ValueError("freq_axis must hold one frequency per row")
        if self.freq_axis.size > 1 and np.any(np.diff(self.freq_axis) <= 0):
            raise ValueError("freq_axis must be strictly increasing")
        if self.time_step <= 0:
            raise ValueError("time_step must be positive")

    @property
    def n_freq(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_time(self) -> int:
        return int(self.values.shape[1])

    @property
    def duration(self) -> float:
        """Covered duration in seconds"""
        return self.n_time * self.time_step

    def above_floor(self) -> np.ndarray:
        """Values in dB above the clip floor (non-negative)"""
        return np.maximum(self.values - self.db_floor, 0.0)


@dataclass(frozen=True, eq=False)
class SyllableEvent:
    """Connected super-threshold component and its fixed-size patch"""
    pixels: np.ndarray  # (n, 2) array of (freq_row, time_col)
    t_start: int
    t_end: int
    f_low: int
    f_high: int
    centroid: Tuple[float, float]  # (time, freq)
    patch: np.ndarray = field(repr=False)
    patch_origin: Tuple[int, int] = (0, 0)  # (time_col, freq_row) of patch cell [0, 0]

    @property
    def n_pixels(self) -> int:
        return int(self.pixels.shape[0])
