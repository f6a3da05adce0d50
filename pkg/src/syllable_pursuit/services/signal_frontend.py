"""
Signal frontend - WAV decoding and dB spectrograms

Decodes PCM WAV files into mono waveforms and turns them into max-referenced
dB spectrograms, optionally cropped in frequency and re-binned onto a
log-spaced axis.
"""

from pathlib import Path
from typing import Tuple, Union

import numpy as np
import soundfile as sf
from scipy import signal

from ..models.config_types import StftConfig
from ..models.signal_types import Spectrogram, Waveform
from ..utils.logging_config import get_logger
from .pipeline_errors import (
    AudioDecodeError,
    EmptyAudioError,
    ShortWaveformError,
    UnsupportedEncodingError,
)

logger = get_logger(__name__)

SUPPORTED_FORMATS = {"WAV", "WAVEX"}
SUPPORTED_SUBTYPES = {"PCM_U8", "PCM_16", "PCM_24", "FLOAT"}


def load_audio(path: Union[str, Path]) -> Waveform:
    """
    Decode a PCM WAV file into a mono waveform

    Args:
        path: WAV file (8/16/24-bit integer or 32-bit float samples)

    Returns:
        Waveform normalized to [-1, 1] with channels averaged

    Raises:
        AudioDecodeError: file missing or unreadable
        UnsupportedEncodingError: not a WAV file or unsupported sample encoding
        EmptyAudioError: file holds no samples
    """
    path = Path(path)
    if not path.is_file():
        raise AudioDecodeError(path, "file does not exist")

    try:
        info = sf.info(str(path))
    except RuntimeError as error:
        raise AudioDecodeError(path, f"cannot read audio header ({error})") from error

    if info.format not in SUPPORTED_FORMATS or info.subtype not in SUPPORTED_SUBTYPES:
        raise UnsupportedEncodingError(path, f"unsupported encoding {info.format}/{info.subtype}")
    if info.frames == 0:
        raise EmptyAudioError(path, "zero-length audio")

    try:
        data, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    except RuntimeError as error:
        raise AudioDecodeError(path, f"cannot decode samples ({error})") from error

    if data.shape[0] == 0:
        raise EmptyAudioError(path, "zero-length audio")

    samples = data.mean(axis=1) if data.shape[1] > 1 else data[:, 0]
    logger.debug("Audio decoded", path=str(path), frames=int(data.shape[0]), channels=int(data.shape[1]), sample_rate=int(sample_rate))
    return Waveform(samples=np.ascontiguousarray(samples), sample_rate=int(sample_rate))


def n_frames(n_samples: int, cfg: StftConfig) -> int:
    """Column count of the spectrogram of ``n_samples`` samples"""
    return (n_samples - cfg.window_size) // cfg.hop + 1


def log_frequency_edges(low_hz: float, high_hz: float, n_bins: int) -> np.ndarray:
    """Log-spaced bin edges between two positive frequencies"""
    return np.geomspace(low_hz, high_hz, n_bins + 1)


def rebin_log_frequency(
    power: np.ndarray,
    freqs: np.ndarray,
    n_bins: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Aggregate linear-frequency power rows onto log-spaced bins

    Every linear row lands in exactly one log bin (rows below the first
    edge go to the first bin, rows above the last to the last), so the
    per-column total power is conserved.

    Returns:
        (log power [n_bins x n_time], geometric bin centers)
    """
    positive = freqs[freqs > 0]
    low = float(positive[0]) if positive.size else 1.0
    high = float(freqs[-1]) if freqs[-1] > low else low * 2.0
    edges = log_frequency_edges(low, high, n_bins)
    bin_index = np.clip(np.searchsorted(edges, freqs, side="right") - 1, 0, n_bins - 1)

    aggregation = np.zeros((n_bins, freqs.size))
    aggregation[bin_index, np.arange(freqs.size)] = 1.0
    centers = np.sqrt(edges[:-1] * edges[1:])
    return aggregation @ power, centers


def compute_spectrogram(wave: Waveform, cfg: StftConfig) -> Spectrogram:
    """
    Compute a max-referenced dB spectrogram

    Args:
        wave: Mono waveform
        cfg: STFT configuration

    Returns:
        Spectrogram whose peak cell is 0 dB and whose values are clipped below at ``cfg.db_floor``

    Raises:
        ShortWaveformError: waveform shorter than one window
    """
    n_samples = wave.samples.size
    if n_samples < cfg.window_size:
        raise ShortWaveformError(n_samples, cfg.window_size)

    freqs, _, stft = signal.stft(
        wave.samples,
        fs=wave.sample_rate,
        window=cfg.window,
        nperseg=cfg.window_size,
        noverlap=cfg.window_size - cfg.hop,
        boundary=None,
        padded=False,
        detrend=False,
    )
    power = np.abs(stft) ** 2

    if cfg.freq_range is not None:
        low_hz, high_hz = cfg.freq_range
        keep = (freqs >= low_hz) & (freqs <= high_hz)
        if not np.any(keep):
            raise ValueError(f"freq_range {cfg.freq_range} selects no STFT rows")
        freqs, power = freqs[keep], power[keep]

    scale = "linear"
    if cfg.log_freq_bins is not None:
        power, freqs = rebin_log_frequency(power, freqs, cfg.log_freq_bins)
        scale = "log"

    values = power_to_db(power, cfg.db_floor)
    return Spectrogram(
        values=values,
        time_step=cfg.hop / wave.sample_rate,
        freq_axis=np.asarray(freqs, dtype=np.float64),
        db_floor=cfg.db_floor,
        scale=scale,
    )


def power_to_db(power: np.ndarray, db_floor: float) -> np.ndarray:
    """Convert power to dB relative to its maximum, clipped at ``db_floor``"""
    reference = float(power.max()) if power.size else 0.0
    if reference <= 0.0:
        return np.full(power.shape, db_floor, dtype=np.float64)
    with np.errstate(divide="ignore"):
        values = 10.0 * np.log10(power / reference)
    return np.maximum(values, db_floor)
