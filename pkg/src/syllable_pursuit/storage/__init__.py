"""
Storage module for syllable-pursuit

Template archives, annotation and ground-truth files, spectrogram archives
and metrics reports.
"""

from .annotation_io import (
    load_spectrogram_npz,
    read_annotation_csv,
    read_annotation_jsonl,
    read_ground_truth_csv,
    save_spectrogram_npz,
    write_annotation_csv,
    write_annotation_jsonl,
    write_ground_truth_csv,
)
from .report import read_report, write_projection_csv, write_report, write_sweep_summary
from .template_archive import TemplateArchive, load_templates, save_templates
from .types import ArchiveManifest, BosBlock, MetricsReport, MetricsRow, OccurrenceBlock, SweepSummary

__all__ = [
    "ArchiveManifest",
    "BosBlock",
    "MetricsReport",
    "MetricsRow",
    "OccurrenceBlock",
    "SweepSummary",
    "TemplateArchive",
    "load_spectrogram_npz",
    "load_templates",
    "read_annotation_csv",
    "read_annotation_jsonl",
    "read_ground_truth_csv",
    "read_report",
    "save_spectrogram_npz",
    "save_templates",
    "write_annotation_csv",
    "write_annotation_jsonl",
    "write_ground_truth_csv",
    "write_projection_csv",
    "write_report",
    "write_sweep_summary",
]
