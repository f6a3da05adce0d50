"""
Unit tests for template archives, annotation files and reports.
"""

from pathlib import Path

import numpy as np
import pytest

from syllable_pursuit.models.annotation_types import AnnotationSequence, Detection, GroundTruthEvent
from syllable_pursuit.models.cluster_types import FitCounts, Template, TemplateSet
from syllable_pursuit.services.pipeline_errors import (
    DatasetLayoutError,
    FingerprintMismatchError,
    InvariantViolationError,
    MissingGroundTruthError,
)
from syllable_pursuit.services.templates import archive_precision
from syllable_pursuit.storage.annotation_io import (
    load_spectrogram_npz,
    read_annotation_csv,
    read_annotation_jsonl,
    read_ground_truth_csv,
    save_spectrogram_npz,
    write_annotation_csv,
    write_annotation_jsonl,
    write_ground_truth_csv,
)
from syllable_pursuit.storage.report import (
    average_row,
    read_report,
    render_markdown,
    write_projection_csv,
    write_report,
    write_sweep_summary,
)
from syllable_pursuit.storage.template_archive import TemplateArchive, load_templates, save_templates
from syllable_pursuit.storage.types import MetricsReport, MetricsRow, SweepCell, SweepEntry, SweepSummary
from tests.conftest import make_spectrogram


@pytest.fixture
def template_set(rng) -> TemplateSet:
    """Two float32-exact templates with merge provenance."""
    matrices = [archive_precision(rng.uniform(0.0, 30.0, size=(6, 9))) for _ in range(2)]
    templates = (Template(id=0, matrix=matrices[0], support=12), Template(id=3, matrix=matrices[1], support=4))
    return TemplateSet(templates, {0: (0, 1, 2), 3: (3,)})


@pytest.fixture
def sequence(rng) -> AnnotationSequence:
    """Annotation with awkward float values."""
    detections = []
    for rank, t in enumerate((5, 40, 77)):
        onset = float(t * 0.004 + rng.uniform(0, 1e-3))
        detections.append(
            Detection(
                template_id=rank % 2,
                t=t,
                f=rank,
                score=float(rng.uniform(100.0, 5000.0)),
                onset_s=onset,
                offset_s=onset + 0.1 / 3,
                low_hz=1000.0 + 1 / 7,
                high_hz=4000.0,
                rank=rank,
                round=rank // 2,
            )
        )
    return AnnotationSequence(recording_id="bird1/song_003", detections=detections, residual_norm=12.5, signal_norm=99.25, fingerprint="abc123")


class TestTemplateArchive:
    """Test template archive storage."""

    def test_bit_exact_round_trip(self, temp_dir: Path, template_set: TemplateSet):
        """Test templates load back bit for bit."""
        counts = FitCounts(n_events=50, n_initial_clusters=4, n_split_clusters=6, n_templates_before_merge=6, n_templates=2)
        save_templates(template_set, temp_dir / "archive", "f00d", counts)
        loaded, manifest = load_templates(temp_dir / "archive", "f00d")

        assert loaded.ids == [0, 3]
        for original, restored in zip(template_set, loaded):
            assert np.array_equal(original.matrix, restored.matrix)
            assert original.support == restored.support
        assert loaded.provenance == {0: (0, 1, 2), 3: (3,)}
        assert manifest.shape == (6, 9)
        assert manifest.counts.before_merge == 6
        assert manifest.counts.after_merge == 2

    def test_blob_layout(self, temp_dir: Path, template_set: TemplateSet):
        """Test blobs are row-major little-endian float32."""
        save_templates(template_set, temp_dir, "f00d")
        blob = (temp_dir / "3.f32").read_bytes()
        assert len(blob) == 6 * 9 * 4
        np.testing.assert_array_equal(np.frombuffer(blob, dtype="<f4").reshape(6, 9), template_set.get(3).matrix)

    def test_fingerprint_mismatch(self, temp_dir: Path, template_set: TemplateSet):
        """Test archives from other settings are refused."""
        save_templates(template_set, temp_dir, "f00d")
        with pytest.raises(FingerprintMismatchError) as excinfo:
            load_templates(temp_dir, "beef")
        assert excinfo.value.expected == "beef"
        assert excinfo.value.found == "f00d"
        assert "manifest.yaml" in excinfo.value.source

    def test_missing_manifest(self, temp_dir: Path):
        """Test a directory without an archive."""
        assert not TemplateArchive(temp_dir).exists()
        with pytest.raises(DatasetLayoutError):
            load_templates(temp_dir)

    def test_truncated_blob(self, temp_dir: Path, template_set: TemplateSet):
        """Test a blob disagreeing with the manifest."""
        save_templates(template_set, temp_dir, "f00d")
        (temp_dir / "0.f32").write_bytes(b"\x00" * 12)
        with pytest.raises(InvariantViolationError):
            load_templates(temp_dir)

    def test_resave_removes_stale_blobs(self, temp_dir: Path, template_set: TemplateSet):
        """Test rewriting an archive with fewer templates."""
        save_templates(template_set, temp_dir, "f00d")
        save_templates(template_set.without([3]), temp_dir, "f00d")
        assert sorted(path.name for path in temp_dir.glob("*.f32")) == ["0.f32"]
        assert load_templates(temp_dir)[0].ids == [0]


class TestAnnotationFiles:
    """Test annotation serialization."""

    def test_csv_round_trip(self, temp_dir: Path, sequence: AnnotationSequence):
        """Test CSV values parse back exactly."""
        path = write_annotation_csv(sequence, temp_dir / "a.csv")
        restored = read_annotation_csv(path)
        assert restored.recording_id == "bird1/song_003"
        assert restored.detections == sequence.detections

    def test_empty_csv_is_header_only(self, temp_dir: Path):
        """Test silence writes just the header."""
        path = write_annotation_csv(AnnotationSequence(recording_id="quiet"), temp_dir / "quiet.csv")
        assert path.read_text().splitlines() == ["recording_id,onset_s,offset_s,low_hz,high_hz,template_id,score,t,f,rank,round"]
        assert read_annotation_csv(path, "quiet").detections == []

    def test_csv_bad_header(self, temp_dir: Path):
        """Test files with other columns."""
        path = temp_dir / "bad.csv"
        path.write_text("onset,offset\n0.1,0.2\n")
        with pytest.raises(DatasetLayoutError):
            read_annotation_csv(path)

    def test_jsonl_keeps_metadata(self, temp_dir: Path, sequence: AnnotationSequence):
        """Test the metadata record."""
        path = write_annotation_jsonl(sequence, temp_dir / "a.jsonl")
        restored = read_annotation_jsonl(path)
        assert restored == sequence
        assert path.read_bytes().count(b"\n") == 4

    def test_jsonl_without_metadata(self, temp_dir: Path):
        """Test a file lacking the metadata record."""
        path = temp_dir / "b.jsonl"
        path.write_text('{"type": "detection", "template_id": 0, "t": 1, "score": 1.0, "onset_s": 0.0, "offset_s": 0.1, "low_hz": 1.0, "high_hz": 2.0}\n')
        with pytest.raises(DatasetLayoutError):
            read_annotation_jsonl(path)

    def test_jsonl_unknown_record(self, temp_dir: Path):
        """Test unknown record types."""
        path = temp_dir / "c.jsonl"
        path.write_text('{"type": "comment"}\n')
        with pytest.raises(DatasetLayoutError):
            read_annotation_jsonl(path)


class TestGroundTruthFiles:
    """Test ground-truth CSV files."""

    def test_round_trip(self, temp_dir: Path):
        """Test events parse back."""
        events = [GroundTruthEvent(onset=0.1, offset=0.25, label="a"), GroundTruthEvent(onset=0.4, offset=0.5, label="b")]
        assert read_ground_truth_csv(write_ground_truth_csv(events, temp_dir / "gt.csv")) == events

    def test_extra_columns_ignored(self, temp_dir: Path):
        """Test additional columns."""
        path = temp_dir / "gt.csv"
        path.write_text("label,onset_s,offset_s,annotator\nx,1.0,1.5,me\n")
        assert read_ground_truth_csv(path) == [GroundTruthEvent(onset=1.0, offset=1.5, label="x")]

    def test_missing_file(self, temp_dir: Path):
        """Test a missing ground-truth file names the path."""
        with pytest.raises(MissingGroundTruthError) as excinfo:
            read_ground_truth_csv(temp_dir / "none.csv")
        assert "none.csv" in str(excinfo.value)

    def test_missing_columns(self, temp_dir: Path):
        """Test a header without the label column."""
        path = temp_dir / "gt.csv"
        path.write_text("onset_s,offset_s\n1.0,1.5\n")
        with pytest.raises(DatasetLayoutError):
            read_ground_truth_csv(path)

    def test_invalid_interval(self, temp_dir: Path):
        """Test rows with onset after offset."""
        path = temp_dir / "gt.csv"
        path.write_text("onset_s,offset_s,label\n2.0,1.5,a\n")
        with pytest.raises(DatasetLayoutError) as excinfo:
            read_ground_truth_csv(path)
        assert "line 2" in str(excinfo.value)


class TestSpectrogramFiles:
    """Test spectrogram archives."""

    def test_round_trip(self, temp_dir: Path, rng):
        """Test values and axes survive storage."""
        spec = make_spectrogram(rng.uniform(0.0, 50.0, size=(16, 40)), time_step=0.004)
        restored = load_spectrogram_npz(save_spectrogram_npz(spec, temp_dir / "s.npz"))
        assert np.array_equal(restored.values, spec.values)
        assert np.array_equal(restored.freq_axis, spec.freq_axis)
        assert restored.time_step == 0.004
        assert restored.scale == "linear"

    def test_incomplete_archive(self, temp_dir: Path):
        """Test archives without the required arrays."""
        path = temp_dir / "s.npz"
        np.savez(path, values=np.zeros((2, 2)))
        with pytest.raises(DatasetLayoutError):
            load_spectrogram_npz(path)


class TestReports:
    """Test metrics report documents."""

    def make_report(self) -> MetricsReport:
        rows = [
            MetricsRow(individual="bird1", detection_precision=0.9, detection_recall=0.8, micro_precision=0.7,
                       weighted_precision=0.75, weighted_recall=0.6, n_templates=12, n_gt_syllables=8, n_detections=10, n_gt_events=11),
            MetricsRow(individual="bird2", detection_precision=None, detection_recall=0.4, n_templates=10, n_detections=0, n_gt_events=5),
        ]
        return MetricsReport(fingerprint="f00d", mode="single", seed=2, support_minutes=10.0, iou_min=0.3, rows=rows, average=average_row(rows))

    def test_average_skips_undefined(self):
        """Test the average row ignores undefined cells."""
        average = self.make_report().average
        assert average.individual == "average"
        assert average.detection_precision == 0.9
        assert average.detection_recall == pytest.approx(0.6)
        assert average.n_templates == 11.0
        assert average.n_detections == 10
        assert average.n_gt_events == 16

    def test_report_parses_back(self, temp_dir: Path):
        """Test every numeric cell round-trips."""
        report = self.make_report()
        path = write_report(report, temp_dir)
        assert read_report(path) == report
        assert (temp_dir / "report.md").is_file()

    def test_markdown_table(self):
        """Test one table line per individual plus the average."""
        text = render_markdown(self.make_report())
        table = [line for line in text.splitlines() if line.startswith("| bird") or line.startswith("| average")]
        assert len(table) == 3
        assert "| bird2 | - | 0.400 |" in text

    def test_projection_csv(self, temp_dir: Path):
        """Test the BoS projection export."""
        path = write_projection_csv([("bird1/s1", "bird1", 0.5, -1.25)], temp_dir / "proj.csv")
        assert path.read_text().splitlines() == ["recording_id,individual,pc1,pc2", "bird1/s1,bird1,0.5,-1.25"]

    def test_sweep_summary(self, temp_dir: Path):
        """Test the sweep summary files."""
        entry = SweepEntry(
            support_minutes=5.0,
            seeds=[0, 1],
            average={"detection_precision": SweepCell(mean=0.9, std=0.05)},
            median_templates=7.0,
        )
        path = write_sweep_summary(SweepSummary(fingerprint="f00d", mode="multi", entries=[entry]), temp_dir)
        assert path.name == "sweep_summary.json"
        markdown = (temp_dir / "sweep_summary.md").read_text(encoding="utf-8")
        assert "| 5 | 0.900 ± 0.050 |" in markdown
