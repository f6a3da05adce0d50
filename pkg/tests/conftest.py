"""
Test configuration and fixtures for syllable-pursuit.
"""

import os
import sys
import tempfile
from pathlib import Path
from typing import Generator, Tuple

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / 'src'
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from syllable_pursuit.models.cluster_types import Template, TemplateSet
from syllable_pursuit.models.config_types import DetectionConfig, HdbscanConfig, MpConfig
from syllable_pursuit.models.signal_types import Spectrogram
from syllable_pursuit.models.synth_types import SynthConfig, SynthCorpusConfig

DB_FLOOR = -80.0


def make_spectrogram(above_floor: np.ndarray, time_step: float = 0.01, freq_axis: np.ndarray = None) -> Spectrogram:
    """Spectrogram whose dB-above-floor values are ``above_floor``"""
    above_floor = np.asarray(above_floor, dtype=np.float64)
    if freq_axis is None:
        freq_axis = np.linspace(1000.0, 1000.0 + 100.0 * (above_floor.shape[0] - 1), above_floor.shape[0])
    return Spectrogram(values=DB_FLOOR + above_floor, time_step=time_step, freq_axis=freq_axis, db_floor=DB_FLOOR)


def make_template_set(*matrices: np.ndarray) -> TemplateSet:
    """Templates with ids 0..n-1"""
    return TemplateSet(tuple(Template(id=i, matrix=np.asarray(m, dtype=np.float64), support=1) for i, m in enumerate(matrices)))


def place(canvas: np.ndarray, matrix: np.ndarray, t: int, f: int = 0) -> np.ndarray:
    """Add ``matrix`` to ``canvas`` with its cell [0, 0] at (row f, column t)"""
    rows, cols = matrix.shape
    canvas[f:f + rows, t:t + cols] += matrix
    return canvas


def blobs(rng: np.random.Generator, centers, n_per_blob: int, spread: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gaussian blobs and their true labels"""
    points = np.concatenate([rng.normal(center, spread, size=(n_per_blob, len(center))) for center in centers])
    labels = np.repeat(np.arange(len(centers)), n_per_blob)
    return points, labels


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator."""
    return np.random.default_rng(12345)


@pytest.fixture
def small_synth_config() -> SynthConfig:
    """Small noiseless synthetic grid with three prototypes."""
    return SynthConfig(
        n_prototypes=3,
        proto_rows=16,
        proto_cols=20,
        n_freq=32,
        n_time=900,
        n_events=12,
        min_gap=20,
        noise_sigma=0.0,
        seed=3,
    )


@pytest.fixture
def synth_detect_config() -> DetectionConfig:
    """Full-band detection suited to the small synthetic grid."""
    return DetectionConfig(eta=10.0, box_time=32, box_freq=32, full_band=True, min_pixels=5)


@pytest.fixture
def small_cluster_config() -> HdbscanConfig:
    """HDBSCAN settings for small test corpora."""
    return HdbscanConfig(min_cluster_size=5, max_cluster_size=200)


@pytest.fixture
def mp_config() -> MpConfig:
    """Matching pursuit with the default acceptance threshold."""
    return MpConfig(min_rel_score=0.2, max_iters_outer=1)


@pytest.fixture
def small_corpus_config(small_synth_config: SynthConfig) -> SynthCorpusConfig:
    """Three individuals with four recordings each on the small grid."""
    recording = small_synth_config.model_copy(update={"noise_sigma": 2.0, "n_events": 15})
    return SynthCorpusConfig(recording=recording, n_individuals=3, recordings_per_individual=4, seed=7)


@pytest.fixture
def clean_env() -> Generator[None, None, None]:
    """Restore environment variables after the test."""
    original_env = os.environ.copy()
    yield
    os.environ.clear()
    os.environ.update(original_env)


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "unit: mark test as a unit test")
    config.addinivalue_line("markers", "integration: mark test as an integration test")
    config.addinivalue_line("markers", "slow: mark test as slow running")


def pytest_collection_modifyitems(config, items):
    """Modify test collection to add markers based on test location."""
    for item in items:
        # Add unit marker to tests in unit/ directory
        if "unit" in str(item.fspath):
            item.add_marker(pytest.mark.unit)

        # Add integration marker to tests in integration/ directory
        elif "integration" in str(item.fspath):
            item.add_marker(pytest.mark.integration)

        # Acceptance runs over full-size corpora
        if any(keyword in item.name.lower() for keyword in ["acceptance", "sweep", "conformance"]):
            item.add_marker(pytest.mark.slow)
