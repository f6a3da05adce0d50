"""
Unit tests for the synthetic corpus generator and its scoring bridge.
"""

from pathlib import Path

import numpy as np
import pytest

from syllable_pursuit.config.config_loader import load_synth_config
from syllable_pursuit.models.annotation_types import GroundTruthEvent
from syllable_pursuit.models.config_types import DetectionConfig
from syllable_pursuit.models.synth_types import SynthConfig, SynthCorpusConfig
from syllable_pursuit.services.evaluation import detection_pr
from syllable_pursuit.services.event_detection import detect_events
from syllable_pursuit.services.pipeline_errors import SynthGridError
from syllable_pursuit.services.synth_oracle import (
    draw_prototypes,
    generate,
    generate_corpus,
    match_templates_to_prototypes,
    prototype_patch,
    prototype_template_set,
    rasterize,
    score_against_truth,
    to_ground_truth,
    truth_annotation,
)
from syllable_pursuit.services.templates import template_distance

PROJECT_ROOT = Path(__file__).resolve().parents[2]


def centroid(matrix: np.ndarray):
    weights = matrix.sum()
    col = float(np.dot(matrix.sum(axis=0), np.arange(matrix.shape[1])) / weights)
    row = float(np.dot(matrix.sum(axis=1), np.arange(matrix.shape[0])) / weights)
    return col, row


class TestGenerate:
    """Test single-recording generation."""

    def test_single_noiseless_event(self, small_synth_config: SynthConfig):
        """Test the spectrogram equals the one placed prototype."""
        truth = generate(small_synth_config.model_copy(update={"n_events": 1}))
        (placement,) = truth.placements
        proto = truth.prototypes[placement.prototype_id]

        expected = np.zeros((32, 900))
        expected[placement.f:placement.f + 16, placement.t:placement.t + 20] = proto
        np.testing.assert_array_equal(truth.spectrogram.above_floor(), expected)

    def test_same_seed_same_truth(self, small_synth_config: SynthConfig):
        """Test determinism."""
        cfg = small_synth_config.model_copy(update={"noise_sigma": 3.0})
        first, second = generate(cfg), generate(cfg)
        assert first.placements == second.placements
        assert all(np.array_equal(a, b) for a, b in zip(first.prototypes, second.prototypes))
        assert np.array_equal(first.spectrogram.values, second.spectrogram.values)

    def test_different_seed_differs(self, small_synth_config: SynthConfig):
        """Test the seed drives the draw."""
        other = small_synth_config.model_copy(update={"seed": 4})
        assert generate(small_synth_config).placements != generate(other).placements

    def test_gaps_respected(self, small_synth_config: SynthConfig):
        """Test every pair of placements keeps min_gap silent columns."""
        cfg = small_synth_config.model_copy(update={"n_events": 20, "min_gap": 30, "n_time": 2000})
        starts = sorted(p.t for p in generate(cfg).placements)
        assert len(starts) == 20
        assert all(b - (a + cfg.proto_cols) >= 30 for a, b in zip(starts, starts[1:]))
        assert starts[-1] + cfg.proto_cols <= 2000

    def test_balanced_prototype_usage(self, small_synth_config: SynthConfig):
        """Test prototype ids are balanced without a usage vector."""
        ids = [p.prototype_id for p in generate(small_synth_config).placements]
        assert sorted(ids) == sorted(list(range(3)) * 4)

    def test_grid_too_small(self, small_synth_config: SynthConfig):
        """Test an impossible grid."""
        with pytest.raises(SynthGridError):
            generate(small_synth_config.model_copy(update={"n_events": 40}))

    def test_noise_is_clipped(self, small_synth_config: SynthConfig):
        """Test rendered values never drop below the floor."""
        truth = generate(small_synth_config.model_copy(update={"noise_sigma": 5.0}))
        assert truth.spectrogram.values.min() >= small_synth_config.db_floor
        assert np.any(truth.spectrogram.above_floor()[:, :5] > 0)

    def test_no_events(self, small_synth_config: SynthConfig):
        """Test an empty recording."""
        truth = generate(small_synth_config.model_copy(update={"n_events": 0}))
        assert truth.placements == ()
        assert np.all(truth.spectrogram.above_floor() == 0.0)

    def test_invalid_config(self):
        """Test prototypes taller than the grid."""
        with pytest.raises(ValueError):
            SynthConfig(proto_rows=40, n_freq=32)


class TestPrototypes:
    """Test prototype construction."""

    def test_rasterized_cutoff(self):
        """Test cells below the support cutoff are zero."""
        matrix = rasterize([[8.0]], [3], (16, 6), 40.0)
        column = matrix[:, 3]
        assert column[8] == 40.0
        assert np.all(column[column > 0] >= 12.0)
        assert np.all(np.delete(matrix, 3, axis=1) == 0.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_default_config_draws_full_bank(self, seed: int):
        """Test the default grid yields all six prototypes."""
        truth = generate(SynthConfig(seed=seed, n_events=6))
        assert len(truth.prototypes) == 6
        assert len(truth.base_rows) == 6

        cfg = DetectionConfig(eta=1.0, box_time=96, full_band=True, min_pixels=1)
        patches = [prototype_patch(truth, k, cfg) for k in range(6)]
        for i in range(6):
            for j in range(i + 1, 6):
                assert template_distance(patches[i], patches[j]) >= 1.0

    @pytest.mark.parametrize("seed", range(5))
    def test_small_config_draws_full_bank(self, small_synth_config: SynthConfig, seed: int):
        """Test the small grid yields its three prototypes."""
        truth = generate(small_synth_config.model_copy(update={"seed": seed}))
        assert len(truth.prototypes) == 3

    def test_example_corpus_bank(self):
        """Test the shipped corpus settings draw a bank."""
        config = load_synth_config(str(PROJECT_ROOT / "config" / "synth_corpus.example.yml"))
        prototypes, base_rows = draw_prototypes(config.recording, np.random.default_rng(config.seed))
        assert len(prototypes) == config.recording.n_prototypes
        assert all(0 <= row <= config.recording.n_freq - config.recording.proto_rows for row in base_rows)

    def test_bank_is_deterministic(self, small_synth_config: SynthConfig):
        """Test the same generator state draws the same bank."""
        first = draw_prototypes(small_synth_config, np.random.default_rng(11))
        second = draw_prototypes(small_synth_config, np.random.default_rng(11))
        assert first[1] == second[1]
        assert all(np.array_equal(a, b) for a, b in zip(first[0], second[0]))

    def test_impossible_distance(self, small_synth_config: SynthConfig):
        """Test a distance no pair of prototypes can reach."""
        cfg = small_synth_config.model_copy(update={"min_distance": 2.5})
        with pytest.raises(SynthGridError):
            draw_prototypes(cfg, np.random.default_rng(0))

    def test_prototypes_are_distinct(self, small_synth_config: SynthConfig):
        """Test pairwise distances of prototype patches."""
        truth = generate(small_synth_config)
        cfg = DetectionConfig(eta=1.0, box_time=64, full_band=True, min_pixels=1)
        patches = [prototype_patch(truth, k, cfg) for k in range(3)]
        for i in range(3):
            for j in range(i + 1, 3):
                assert template_distance(patches[i], patches[j]) >= small_synth_config.min_distance

    def test_prototypes_match_themselves(self, small_synth_config: SynthConfig, synth_detect_config: DetectionConfig):
        """Test prototype patches as templates map back to their prototype."""
        truth = generate(small_synth_config)
        patches = [prototype_patch(truth, k, synth_detect_config) for k in range(3)]
        ts = prototype_template_set(patches)
        matches = match_templates_to_prototypes(ts, truth, synth_detect_config)
        assert matches == {0: (0, 0.0), 1: (1, 0.0), 2: (2, 0.0)}

    def test_template_support(self, small_synth_config: SynthConfig):
        """Test template support counts placements."""
        truth = generate(small_synth_config)
        ts = prototype_template_set(truth.prototypes, truth.placements)
        assert [tpl.support for tpl in ts] == [4, 4, 4]


class TestRoundTrip:
    """Test detection on noiseless synthetic data."""

    def test_events_recovered(self, small_synth_config: SynthConfig, synth_detect_config: DetectionConfig):
        """Test one component per placement, centered on the placement."""
        truth = generate(small_synth_config)
        events = detect_events(truth.spectrogram, synth_detect_config)
        assert len(events) == small_synth_config.n_events

        for event, placement in zip(events, sorted(truth.placements, key=lambda p: p.t)):
            col, row = centroid(truth.prototypes[placement.prototype_id])
            assert abs(event.centroid[0] - (placement.t + col)) <= 1.0
            assert abs(event.centroid[1] - (placement.f + row)) <= 1.0


class TestScoreAgainstTruth:
    """Test scoring annotations against generating placements."""

    def test_verbatim_truth(self, small_synth_config: SynthConfig):
        """Test the truth itself scores 1.0 everywhere."""
        truth = generate(small_synth_config)
        annotation = truth_annotation(truth, "rec")
        assert annotation.residual_norm == 0.0
        detection, classification = score_against_truth(annotation, truth, 0.3)

        assert (detection.precision, detection.recall) == (1.0, 1.0)
        assert classification.micro_precision == 1.0
        assert classification.weighted_precision == 1.0
        assert classification.weighted_recall == 1.0

    def test_half_missing(self, small_synth_config: SynthConfig):
        """Test an annotation missing every other event."""
        truth = generate(small_synth_config)
        annotation = truth_annotation(truth)
        halved = annotation.model_copy(update={"detections": annotation.detections[::2]})
        detection, _ = score_against_truth(halved, truth, 0.3)
        assert detection.recall == 0.5
        assert detection.precision == 1.0

    def test_perturbed_onsets_match_manual_conversion(self, small_synth_config: SynthConfig):
        """Test against ground truth converted by hand."""
        truth = generate(small_synth_config)
        step = small_synth_config.time_step
        manual = []
        for placement in sorted(truth.placements, key=lambda p: p.t):
            active = np.flatnonzero(truth.prototypes[placement.prototype_id].sum(axis=0) > 0)
            manual.append(
                GroundTruthEvent(
                    onset=(placement.t + active[0]) * step,
                    offset=(placement.t + active[-1] + 1) * step,
                    label=str(placement.prototype_id),
                )
            )
        converted = to_ground_truth(truth)
        assert [e.label for e in converted] == [e.label for e in manual]
        assert [e.onset for e in converted] == pytest.approx([e.onset for e in manual])
        assert [e.offset for e in converted] == pytest.approx([e.offset for e in manual])

        annotation = truth_annotation(truth)
        shifted = annotation.model_copy(
            update={
                "detections": [
                    det.model_copy(update={"onset_s": det.onset_s + 2 * step, "offset_s": det.offset_s + 2 * step})
                    for det in annotation.detections
                ]
            }
        )
        detection, _ = score_against_truth(shifted, truth, 0.3)
        assert detection == detection_pr(shifted, manual, 0.3)
        assert detection.recall == 1.0


class TestCorpus:
    """Test multi-individual corpora."""

    def test_layout_and_sharing(self, small_corpus_config: SynthCorpusConfig):
        """Test individuals, recording ids and the shared bank."""
        corpus = generate_corpus(small_corpus_config)
        assert sorted(corpus.recordings) == ["ind00", "ind01", "ind02"]
        assert [rid for rid, _ in corpus.recordings["ind01"]] == [f"ind01_rec{i:03d}" for i in range(4)]
        for songs in corpus.recordings.values():
            for _, truth in songs:
                assert all(np.array_equal(a, b) for a, b in zip(truth.prototypes, corpus.prototypes))
                assert len(truth.placements) == 15

    def test_corpus_determinism(self, small_corpus_config: SynthCorpusConfig):
        """Test the corpus seed fixes every recording."""
        first = generate_corpus(small_corpus_config)
        second = generate_corpus(small_corpus_config)
        for individual in first.recordings:
            for (_, a), (_, b) in zip(first.recordings[individual], second.recordings[individual]):
                assert np.array_equal(a.spectrogram.values, b.spectrogram.values)

    def test_recordings_differ(self, small_corpus_config: SynthCorpusConfig):
        """Test recordings get their own seeds."""
        corpus = generate_corpus(small_corpus_config)
        songs = [truth for songs in corpus.recordings.values() for _, truth in songs]
        assert len({tuple(truth.placements) for truth in songs}) == len(songs)
