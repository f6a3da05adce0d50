"""
Unit tests for WAV decoding and spectrogram computation.
"""

from pathlib import Path

import numpy as np
import pytest
import soundfile as sf
from scipy import signal

from syllable_pursuit.models.config_types import StftConfig
from syllable_pursuit.models.signal_types import Waveform
from syllable_pursuit.services.pipeline_errors import (
    AudioDecodeError,
    DataError,
    EmptyAudioError,
    ShortWaveformError,
    UnsupportedEncodingError,
)
from syllable_pursuit.services.signal_frontend import (
    compute_spectrogram,
    load_audio,
    n_frames,
    power_to_db,
    rebin_log_frequency,
)

SAMPLE_RATE = 32000


def sine(freq_hz: float, seconds: float = 1.0, amplitude: float = 0.5) -> np.ndarray:
    t = np.arange(int(SAMPLE_RATE * seconds)) / SAMPLE_RATE
    return amplitude * np.sin(2 * np.pi * freq_hz * t)


class TestLoadAudio:
    """Test WAV decoding."""

    def test_silence(self, temp_dir: Path):
        """Test 16-bit silence decodes to zeros."""
        path = temp_dir / "silence.wav"
        sf.write(str(path), np.zeros(SAMPLE_RATE, dtype=np.int16), SAMPLE_RATE, subtype="PCM_16")

        wave = load_audio(path)
        assert wave.sample_rate == SAMPLE_RATE
        assert wave.samples.shape == (SAMPLE_RATE,)
        assert np.all(wave.samples == 0.0)
        assert wave.duration == 1.0

    def test_stereo_mixdown(self, temp_dir: Path):
        """Test channels are averaged to mono."""
        path = temp_dir / "stereo.wav"
        data = np.column_stack([np.full(1000, 0.5), np.full(1000, -0.5)])
        sf.write(str(path), data, SAMPLE_RATE, subtype="PCM_16")

        wave = load_audio(path)
        assert wave.samples.shape == (1000,)
        assert np.all(wave.samples == 0.0)

    def test_integer_scaling(self, temp_dir: Path):
        """Test 16-bit full scale maps to 32767/32768."""
        path = temp_dir / "peak.wav"
        data = np.array([0, 32767, -32768, 16384], dtype=np.int16)
        sf.write(str(path), data, SAMPLE_RATE, subtype="PCM_16")

        wave = load_audio(path)
        assert wave.samples[1] == 32767 / 32768
        assert wave.samples[2] == -1.0
        assert wave.samples[3] == 0.5

    @pytest.mark.parametrize("subtype", ["PCM_U8", "PCM_24", "FLOAT"])
    def test_supported_encodings(self, temp_dir: Path, subtype: str):
        """Test every supported sample encoding decodes."""
        path = temp_dir / f"{subtype}.wav"
        sf.write(str(path), np.array([0.0, 0.5, -0.5]), SAMPLE_RATE, subtype=subtype)
        wave = load_audio(path)
        np.testing.assert_allclose(wave.samples, [0.0, 0.5, -0.5], atol=1 / 128)

    def test_missing_file(self, temp_dir: Path):
        """Test a missing file."""
        with pytest.raises(AudioDecodeError) as excinfo:
            load_audio(temp_dir / "missing.wav")
        assert "missing.wav" in str(excinfo.value)
        assert excinfo.value.exit_code == 2

    def test_garbage_file(self, temp_dir: Path):
        """Test a file that is not audio at all."""
        path = temp_dir / "garbage.wav"
        path.write_bytes(b"this is not a riff header" * 10)
        with pytest.raises(AudioDecodeError):
            load_audio(path)

    def test_unsupported_container(self, temp_dir: Path):
        """Test FLAC is refused."""
        path = temp_dir / "tone.flac"
        sf.write(str(path), sine(440.0, 0.1), SAMPLE_RATE, format="FLAC")
        with pytest.raises(UnsupportedEncodingError) as excinfo:
            load_audio(path)
        assert "tone.flac" in str(excinfo.value)

    def test_unsupported_subtype(self, temp_dir: Path):
        """Test 64-bit float WAV is refused."""
        path = temp_dir / "double.wav"
        sf.write(str(path), sine(440.0, 0.1), SAMPLE_RATE, subtype="DOUBLE")
        with pytest.raises(UnsupportedEncodingError):
            load_audio(path)

    def test_zero_length(self, temp_dir: Path):
        """Test a WAV without samples."""
        path = temp_dir / "empty.wav"
        sf.write(str(path), np.zeros(0), SAMPLE_RATE, subtype="PCM_16")
        with pytest.raises(EmptyAudioError):
            load_audio(path)

    def test_errors_are_distinct(self):
        """Test decode errors are distinct data errors."""
        kinds = {AudioDecodeError, UnsupportedEncodingError, EmptyAudioError}
        assert len(kinds) == 3
        assert all(issubclass(kind, DataError) for kind in kinds)


class TestComputeSpectrogram:
    """Test the dB spectrogram."""

    def test_shape_law(self):
        """Test the column count."""
        cfg = StftConfig()
        for n_samples in (512, 513, 640, 32000):
            spec = compute_spectrogram(Waveform(sine(1000.0)[:n_samples], SAMPLE_RATE), cfg)
            assert spec.n_time == (n_samples - 512) // 128 + 1 == n_frames(n_samples, cfg)
            assert spec.n_freq == 257

    def test_silence_is_floor(self):
        """Test silence clips to the floor everywhere."""
        spec = compute_spectrogram(Waveform(np.zeros(4096), SAMPLE_RATE), StftConfig())
        assert np.all(spec.values == -80.0)
        assert np.all(spec.above_floor() == 0.0)

    def test_peak_is_zero_db(self):
        """Test max-referencing and the clip floor."""
        spec = compute_spectrogram(Waveform(sine(3000.0), SAMPLE_RATE), StftConfig())
        assert spec.values.max() == 0.0
        assert spec.values.min() >= -80.0
        assert spec.time_step == 128 / SAMPLE_RATE

    def test_tone_row(self):
        """Test a bin-centered tone lands on its row."""
        f0 = 62.5 * 64
        spec = compute_spectrogram(Waveform(sine(f0), SAMPLE_RATE), StftConfig())
        row = int(np.argmax(spec.values.mean(axis=1)))
        assert spec.freq_axis[row] == f0

    def test_chirp_is_monotone(self):
        """Test a rising chirp has a non-decreasing peak row."""
        t = np.arange(SAMPLE_RATE) / SAMPLE_RATE
        chirp = 0.5 * signal.chirp(t, f0=1000.0, t1=1.0, f1=4000.0)
        spec = compute_spectrogram(Waveform(chirp, SAMPLE_RATE), StftConfig())
        peaks = np.argmax(spec.values, axis=0)
        assert np.all(np.diff(peaks) >= 0)
        assert spec.freq_axis[peaks[0]] < 1500.0
        assert spec.freq_axis[peaks[-1]] > 3500.0

    def test_scale_invariance(self):
        """Test global gain leaves max-referenced values unchanged."""
        wave = sine(2000.0) + 0.1 * sine(5000.0)
        cfg = StftConfig()
        loud = compute_spectrogram(Waveform(wave, SAMPLE_RATE), cfg)
        quiet = compute_spectrogram(Waveform(0.25 * wave, SAMPLE_RATE), cfg)
        np.testing.assert_allclose(quiet.values, loud.values, rtol=0, atol=1e-9)

    def test_determinism(self, rng):
        """Test identical input gives identical output."""
        wave = Waveform(rng.uniform(-1, 1, size=8000), SAMPLE_RATE)
        first = compute_spectrogram(wave, StftConfig())
        second = compute_spectrogram(wave, StftConfig())
        assert np.array_equal(first.values, second.values)

    def test_frequency_crop(self):
        """Test rows outside freq_range are dropped."""
        cfg = StftConfig(freq_range=(1000.0, 4000.0))
        spec = compute_spectrogram(Waveform(sine(2000.0), SAMPLE_RATE), cfg)
        assert spec.freq_axis[0] >= 1000.0
        assert spec.freq_axis[-1] <= 4000.0
        assert spec.n_freq == 49

    def test_crop_outside_band(self):
        """Test a crop selecting no rows."""
        with pytest.raises(ValueError):
            compute_spectrogram(Waveform(sine(2000.0), SAMPLE_RATE), StftConfig(freq_range=(20000.0, 21000.0)))

    def test_log_frequency_mode(self):
        """Test log rebinning produces a log axis."""
        cfg = StftConfig(log_freq_bins=32, freq_range=(1000.0, 12000.0))
        spec = compute_spectrogram(Waveform(sine(3000.0), SAMPLE_RATE), cfg)
        assert spec.scale == "log"
        assert spec.n_freq == 32
        assert np.all(np.diff(spec.freq_axis) > 0)
        ratios = spec.freq_axis[1:] / spec.freq_axis[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)

    def test_short_waveform(self):
        """Test a waveform shorter than one window."""
        with pytest.raises(ShortWaveformError) as excinfo:
            compute_spectrogram(Waveform(np.zeros(100), SAMPLE_RATE), StftConfig())
        assert isinstance(excinfo.value, ValueError)
        assert excinfo.value.n_samples == 100


class TestRebinning:
    """Test energy-preserving log rebinning."""

    def test_power_is_conserved_per_column(self, rng):
        """Test every linear row lands in exactly one bin."""
        freqs = np.linspace(0.0, 16000.0, 257)
        power = rng.exponential(size=(257, 40))
        rebinned, centers = rebin_log_frequency(power, freqs, 24)

        assert rebinned.shape == (24, 40)
        assert centers.shape == (24,)
        np.testing.assert_allclose(rebinned.sum(axis=0), power.sum(axis=0), rtol=1e-9)

    def test_power_to_db_reference(self):
        """Test dB conversion against the maximum."""
        power = np.array([[1.0, 0.1], [0.01, 0.0]])
        values = power_to_db(power, -80.0)
        np.testing.assert_allclose(values, [[0.0, -10.0], [-20.0, -80.0]])

    def test_power_to_db_of_zeros(self):
        """Test all-zero power sits at the floor."""
        assert np.all(power_to_db(np.zeros((3, 4)), -60.0) == -60.0)


class TestWaveformType:
    """Test waveform invariants."""

    def test_empty_rejected(self):
        """Test an empty waveform."""
        with pytest.raises(ValueError):
            Waveform(np.zeros(0), SAMPLE_RATE)

    def test_bad_rate(self):
        """Test a non-positive sample rate."""
        with pytest.raises(ValueError):
            Waveform(np.zeros(10), 0)
