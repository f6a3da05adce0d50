"""
Unit tests for syllable event detection and patch extraction.
"""

import numpy as np
import pytest

from syllable_pursuit.models.config_types import DetectionConfig
from syllable_pursuit.services.event_detection import (
    detect_events,
    extract_patch,
    patch_origin,
    patch_shape,
    stack_patches,
)
from tests.conftest import make_spectrogram


@pytest.fixture
def box_config() -> DetectionConfig:
    """Banded detection with a 10 x 20 patch."""
    return DetectionConfig(eta=10.0, box_time=20, box_freq=10, full_band=False, min_pixels=5)


def canvas(rows: int = 40, cols: int = 100) -> np.ndarray:
    return np.zeros((rows, cols))


class TestDetectEvents:
    """Test connected component detection."""

    def test_single_block(self, box_config: DetectionConfig):
        """Test one rectangular event."""
        energy = canvas()
        energy[10:15, 20:30] = 20.0
        events = detect_events(make_spectrogram(energy), box_config)

        assert len(events) == 1
        ev = events[0]
        assert (ev.t_start, ev.t_end, ev.f_low, ev.f_high) == (20, 29, 10, 14)
        assert ev.n_pixels == 50
        assert ev.centroid == (24.5, 12.0)

    def test_patch_is_centered_on_centroid(self, box_config: DetectionConfig):
        """Test patch placement and content."""
        energy = canvas()
        energy[10:15, 20:30] = 20.0
        ev = detect_events(make_spectrogram(energy), box_config)[0]

        # round-half-up of 24.5 is 25, so the window starts at 25 - 10
        assert ev.patch_origin == (15, 7)
        assert ev.patch.shape == (10, 20)
        expected = np.zeros((10, 20))
        expected[3:8, 5:15] = 20.0
        np.testing.assert_array_equal(ev.patch, expected)

    def test_threshold_is_inclusive(self, box_config: DetectionConfig):
        """Test a cell exactly eta above the floor is kept."""
        energy = canvas()
        energy[5, 10:15] = 10.0
        energy[20, 50:55] = 9.999
        events = detect_events(make_spectrogram(energy), box_config)
        assert len(events) == 1
        assert events[0].t_start == 10

    def test_diagonal_cells_connect(self):
        """Test 8-connectivity."""
        energy = canvas()
        for step in range(6):
            energy[10 + step, 30 + step] = 15.0
        cfg = DetectionConfig(box_time=20, box_freq=20, min_pixels=1)
        events = detect_events(make_spectrogram(energy), cfg)
        assert len(events) == 1
        assert events[0].n_pixels == 6

    def test_events_sorted_by_onset(self, box_config: DetectionConfig):
        """Test ordering by (t_start, f_low)."""
        energy = canvas()
        energy[25:30, 60:70] = 30.0
        energy[2:6, 10:20] = 30.0
        energy[30:35, 10:20] = 30.0
        events = detect_events(make_spectrogram(energy), box_config)
        assert [(ev.t_start, ev.f_low) for ev in events] == [(10, 2), (10, 30), (60, 25)]

    def test_small_components_dropped(self, box_config: DetectionConfig):
        """Test the minimum component size."""
        energy = canvas()
        energy[10, 10:13] = 20.0
        energy[20:22, 40:43] = 20.0
        events = detect_events(make_spectrogram(energy), box_config)
        assert [ev.n_pixels for ev in events] == [6]

    def test_empty_spectrogram(self, box_config: DetectionConfig):
        """Test a silent spectrogram has no events."""
        assert detect_events(make_spectrogram(canvas()), box_config) == []
        assert stack_patches([]).shape == (0, 0)

    def test_weighted_centroid(self, box_config: DetectionConfig):
        """Test the centroid is energy weighted."""
        energy = canvas()
        energy[10, 20:30] = 10.0
        energy[10, 29] = 100.0
        ev = detect_events(make_spectrogram(energy), box_config)[0]
        expected_t = (sum(range(20, 29)) * 10.0 + 29 * 100.0) / (9 * 10.0 + 100.0)
        assert ev.centroid[0] == pytest.approx(expected_t)
        assert ev.centroid[1] == 10.0


class TestDetectionInvariants:
    """Test properties that hold for any spectrogram."""

    @pytest.fixture
    def sparse_energy(self, rng) -> np.ndarray:
        """Random cells between 0 and 30 dB, about a quarter of them above 10 dB."""
        energy = rng.uniform(0.0, 30.0, size=(30, 80))
        energy[rng.uniform(size=energy.shape) < 0.6] = 0.0
        return energy

    def test_events_partition_the_mask(self, sparse_energy: np.ndarray):
        """Test the events cover every super-threshold cell exactly once."""
        cfg = DetectionConfig(eta=10.0, box_time=20, box_freq=10, min_pixels=1)
        events = detect_events(make_spectrogram(sparse_energy), cfg)

        cells = [tuple(pixel) for ev in events for pixel in ev.pixels]
        assert len(cells) == len(set(cells))
        expected = {tuple(cell) for cell in np.argwhere(sparse_energy >= 10.0)}
        assert set(cells) == expected

    def test_higher_threshold_keeps_a_subset(self, sparse_energy: np.ndarray):
        """Test raising eta only removes cells."""
        spec = make_spectrogram(sparse_energy)
        covered = []
        for eta in (5.0, 10.0, 20.0, 28.0):
            cfg = DetectionConfig(eta=eta, box_time=20, box_freq=10, min_pixels=1)
            covered.append({tuple(pixel) for ev in detect_events(spec, cfg) for pixel in ev.pixels})
        assert all(later <= earlier for earlier, later in zip(covered, covered[1:]))

    def test_translation_equivariance(self, box_config: DetectionConfig, rng):
        """Test shifting the spectrogram shifts the events and keeps the patches."""
        energy = canvas(rows=50, cols=120)
        energy[10:16, 20:31] = rng.uniform(12.0, 40.0, size=(6, 11))
        energy[20:24, 60:75] = rng.uniform(12.0, 40.0, size=(4, 15))
        shifted = np.roll(np.roll(energy, 7, axis=0), 13, axis=1)

        original = detect_events(make_spectrogram(energy), box_config)
        moved = detect_events(make_spectrogram(shifted), box_config)

        assert len(original) == len(moved) == 2
        for a, b in zip(original, moved):
            assert (b.t_start, b.f_low) == (a.t_start + 13, a.f_low + 7)
            assert b.centroid == pytest.approx((a.centroid[0] + 13, a.centroid[1] + 7))
            assert b.patch_origin == (a.patch_origin[0] + 13, a.patch_origin[1] + 7)
            np.testing.assert_array_equal(b.patch, a.patch)

    def test_patches_reconstruct_the_thresholded_energy(self, box_config: DetectionConfig, rng):
        """Test events inside their boxes add back up to the masked spectrogram."""
        energy = canvas(rows=40, cols=120)
        for row, col in ((5, 10), (20, 30), (8, 55), (28, 80), (15, 100)):
            energy[row:row + 4, col:col + 8] = rng.uniform(12.0, 40.0, size=(4, 8))
        spec = make_spectrogram(energy)
        events = detect_events(spec, box_config)

        rebuilt = np.zeros_like(energy)
        for ev in events:
            t0, f0 = ev.patch_origin
            rows, cols = ev.patch.shape
            rebuilt[f0:f0 + rows, t0:t0 + cols] += ev.patch
        assert len(events) == 5
        np.testing.assert_array_equal(rebuilt, np.where(energy >= box_config.eta, energy, 0.0))


class TestPatchExtraction:
    """Test fixed-size patches."""

    def test_full_band_patch(self):
        """Test full-band patches span every row."""
        energy = canvas(rows=32)
        energy[4:20, 40:50] = 25.0
        spec = make_spectrogram(energy)
        cfg = DetectionConfig(box_time=24, full_band=True)
        ev = detect_events(spec, cfg)[0]

        assert patch_shape(spec, cfg) == (32, 24)
        assert ev.patch.shape == (32, 24)
        assert ev.patch_origin[1] == 0
        np.testing.assert_array_equal(ev.patch[4:20].sum(axis=0) > 0, np.r_[np.zeros(7), np.ones(10), np.zeros(7)] > 0)

    def test_large_event_is_cropped(self):
        """Test events wider than the box keep their central part."""
        energy = canvas()
        energy[10:12, 20:60] = 20.0
        cfg = DetectionConfig(box_time=10, box_freq=4)
        ev = detect_events(make_spectrogram(energy), cfg)[0]

        assert ev.patch.shape == (4, 10)
        assert np.all(ev.patch[ev.patch > 0] == 20.0)
        assert ev.patch.sum() == 20.0 * 2 * 10
        assert ev.t_end - ev.t_start + 1 == 40

    def test_edge_event_keeps_visible_part(self):
        """Test an event at the spectrogram border."""
        energy = canvas()
        energy[10:15, 0:4] = 20.0
        cfg = DetectionConfig(box_time=20, box_freq=10)
        ev = detect_events(make_spectrogram(energy), cfg)[0]

        assert ev.patch_origin[0] < 0
        assert ev.patch.sum() == 20.0 * 20

    def test_other_events_excluded_from_patch(self, box_config: DetectionConfig):
        """Test neighbouring events inside the box stay zero."""
        energy = canvas()
        energy[10:15, 20:30] = 20.0
        energy[10:15, 32:34] = 40.0
        events = detect_events(make_spectrogram(energy), box_config)

        assert len(events) == 2
        assert np.all(events[0].patch <= 20.0)
        assert events[0].patch.sum() == 20.0 * 50

    def test_extract_patch_matches_detection(self, box_config: DetectionConfig, rng):
        """Test re-extraction reproduces the stored patch."""
        energy = canvas()
        energy[5:12, 15:35] = rng.uniform(12.0, 40.0, size=(7, 20))
        spec = make_spectrogram(energy)
        ev = detect_events(spec, box_config)[0]
        np.testing.assert_array_equal(extract_patch(spec, ev, box_config), ev.patch)
        assert patch_origin(spec, ev.centroid, box_config) == ev.patch_origin

    def test_stack_patches(self, box_config: DetectionConfig):
        """Test flattening of event patches."""
        energy = canvas()
        energy[10:15, 20:30] = 20.0
        energy[10:15, 60:70] = 20.0
        events = detect_events(make_spectrogram(energy), box_config)
        stacked = stack_patches(events)
        assert stacked.shape == (2, 200)
        np.testing.assert_array_equal(stacked[0], stacked[1])
