"""
Pipeline orchestration

Runs the stages end to end over a dataset split: template fitting on the
support set, annotation of the query set with refinement, and evaluation
against ground truth. Every command recomputes the split from the dataset
and the seed, so commands can run in separate processes.

Output layout under ``paths.output_root``::

    split.json
    templates/<unit>/                  fitted archive
    templates_refined/<unit>/          archive after refinement
    annotations/{query,support}/<individual>/<stem>.{csv,jsonl}
    report.json, report.md, bos_projection.csv

A fitting unit is one individual in single mode and ``all`` in multi mode.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import orjson

from ..config.config_loader import config_fingerprint
from ..models.annotation_types import EMPTY_LABEL, AnnotationSequence, GroundTruthEvent, LabelMap
from ..models.cluster_types import TemplateSet
from ..models.config_types import PipelineConfig
from ..models.signal_types import Spectrogram
from ..models.synth_types import SynthCorpusConfig
from ..storage.annotation_io import read_annotation_jsonl, write_annotation_csv, write_annotation_jsonl
from ..storage.report import PROJECTION_CSV, average_row, write_projection_csv, write_report
from ..storage.template_archive import load_templates, save_templates
from ..storage.types import BosBlock, MetricsReport, MetricsRow, OccurrenceBlock
from ..utils.logging_config import get_logger
from ..utils.worker_pool import ordered_map
from .dataset import RecordingRef, SupportQuerySplit, discover_recordings, load_ground_truth, load_spectrogram, make_split
from .evaluation import (
    assign_support_labels,
    bag_of_syllables,
    bos_edges,
    bos_projection,
    build_label_map,
    evaluate_recordings,
    group_labels_by_template,
    retrieval_map,
    template_occurrence_profile,
    template_sharing,
)
from .event_detection import detect_events
from .matching_pursuit import greedy_decompose, postprocess, refine
from .pipeline_errors import DatasetLayoutError, FingerprintMismatchError, TemplateShapeError
from .synth_oracle import generate_corpus, write_corpus
from .templates import fit_template_set

logger = get_logger(__name__)

MULTI_UNIT = "all"
SPLIT_FILE = "split.json"


@dataclass(frozen=True)
class OutputLayout:
    """Paths of the pipeline outputs under one root"""
    root: Path

    @property
    def split_file(self) -> Path:
        return self.root / SPLIT_FILE

    def templates(self, unit: str) -> Path:
        return self.root / "templates" / unit

    def refined_templates(self, unit: str) -> Path:
        return self.root / "templates_refined" / unit

    def annotation(self, kind: str, recording_id: str, suffix: str = ".jsonl") -> Path:
        return self.root / "annotations" / kind / f"{recording_id}{suffix}"


def output_layout(config: PipelineConfig) -> OutputLayout:
    return OutputLayout(Path(config.paths.output_root))


def fitting_units(split: SupportQuerySplit, mode: str) -> Dict[str, List[str]]:
    """Individuals pooled by every fitting unit"""
    if mode == "single":
        return {individual: [individual] for individual in split.individuals}
    return {MULTI_UNIT: list(split.individuals)}


def prepare_split(config: PipelineConfig) -> SupportQuerySplit:
    """Discover the dataset and draw the seeded support/query split"""
    return make_split(discover_recordings(config.paths), config.support_minutes, config.seed)


def write_split(split: SupportQuerySplit, path: Path) -> Path:
    """Record the split as JSON"""
    payload = {
        "seed": split.seed,
        "support_minutes": split.support_minutes,
        "support": {ind: [ref.recording_id for ref in refs] for ind, refs in sorted(split.support.items())},
        "query": {ind: [ref.recording_id for ref in refs] for ind, refs in sorted(split.query.items())},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS) + b"\n")
    return path


def _unit_refs(refs_by_individual: Dict[str, List[RecordingRef]], individuals: Sequence[str]) -> List[RecordingRef]:
    refs = [ref for individual in individuals for ref in refs_by_individual.get(individual, [])]
    return sorted(refs, key=lambda ref: ref.recording_id)


def load_spectrograms(refs: Sequence[RecordingRef], config: PipelineConfig, workers: Optional[int] = None) -> List[Spectrogram]:
    return ordered_map(lambda ref: load_spectrogram(ref, config.stft), refs, workers)


def _patch_stack(events_per_recording: Sequence[list], refs: Sequence[RecordingRef]) -> List[np.ndarray]:
    patches: List[np.ndarray] = []
    shape: Optional[Tuple[int, ...]] = None
    for ref, events in zip(refs, events_per_recording):
        for ev in events:
            if shape is None:
                shape = ev.patch.shape
            elif ev.patch.shape != shape:
                raise TemplateShapeError(
                    f"{ref.recording_id}: patch shape {ev.patch.shape} differs from {shape}; "
                    "recordings must share the frequency axis"
                )
            patches.append(ev.patch)
    return patches


def cmd_fit(
    config: PipelineConfig,
    split: Optional[SupportQuerySplit] = None,
    workers: Optional[int] = None,
) -> Dict[str, Path]:
    """
    Learn templates from the support set

    Detection, initial clustering, split, median templates and merging run
    per fitting unit; one archive is written per unit.

    Returns:
        Archive directory of every unit
    """
    split = split or prepare_split(config)
    layout = output_layout(config)
    fingerprint = config_fingerprint(config)
    write_split(split, layout.split_file)

    archives: Dict[str, Path] = {}
    for unit, individuals in fitting_units(split, config.mode).items():
        refs = _unit_refs(split.support, individuals)
        spectrograms = load_spectrograms(refs, config, workers)
        events = ordered_map(lambda spec: detect_events(spec, config.detect), spectrograms, workers)
        patches = _patch_stack(events, refs)
        logger.info("Support events detected", unit=unit, recordings=len(refs), events=len(patches))

        ts, counts = fit_template_set(patches, config.hdbscan, config.split_cluster_config, config.merge_h)
        save_templates(ts, layout.templates(unit), fingerprint, counts)
        logger.info(
            "Templates fitted",
            unit=unit,
            initial_clusters=counts.n_initial_clusters,
            split_clusters=counts.n_split_clusters,
            before_merge=counts.n_templates_before_merge,
            templates=counts.n_templates,
        )
        archives[unit] = layout.templates(unit)
    return archives


def _write_annotation(seq: AnnotationSequence, layout: OutputLayout, kind: str) -> Path:
    write_annotation_csv(seq, layout.annotation(kind, seq.recording_id, ".csv"))
    return write_annotation_jsonl(seq, layout.annotation(kind, seq.recording_id))


def cmd_annotate(
    config: PipelineConfig,
    split: Optional[SupportQuerySplit] = None,
    workers: Optional[int] = None,
) -> Dict[str, Path]:
    """
    Annotate the query set with refinement, then the support set

    The query recordings of every unit go through ``refine``; the support
    recordings are decomposed with the final templates so the label map
    can be built from them.

    Returns:
        Annotation file of every recording

    Raises:
        FingerprintMismatchError: the archive was fitted with other STFT/detection settings
    """
    split = split or prepare_split(config)
    layout = output_layout(config)
    fingerprint = config_fingerprint(config)

    written: Dict[str, Path] = {}
    for unit, individuals in fitting_units(split, config.mode).items():
        ts, _ = load_templates(layout.templates(unit), expected_fingerprint=fingerprint)
        query_refs = _unit_refs(split.query, individuals)
        query_specs = load_spectrograms(query_refs, config, workers)
        final_ts, query_seqs = refine(
            query_specs,
            ts,
            config.mp,
            config.split_cluster_config,
            detect_cfg=config.detect,
            merge_h=config.merge_h,
            recording_ids=[ref.recording_id for ref in query_refs],
            workers=workers,
        )
        save_templates(final_ts, layout.refined_templates(unit), fingerprint)

        support_refs = _unit_refs(split.support, individuals)
        support_specs = load_spectrograms(support_refs, config, workers)
        support_seqs = ordered_map(
            lambda item: postprocess(greedy_decompose(item[0], final_ts, config.mp, item[1]), final_ts),
            list(zip(support_specs, [ref.recording_id for ref in support_refs])),
            workers,
        )

        for kind, sequences in (("query", query_seqs), ("support", support_seqs)):
            for seq in sequences:
                stamped = seq.model_copy(update={"fingerprint": fingerprint})
                written[seq.recording_id] = _write_annotation(stamped, layout, kind)
        logger.info(
            "Unit annotated",
            unit=unit,
            templates=len(final_ts),
            query=len(query_seqs),
            support=len(support_seqs),
            detections=sum(len(seq) for seq in query_seqs),
        )
    return written


def read_annotation(layout: OutputLayout, kind: str, ref: RecordingRef, fingerprint: str) -> AnnotationSequence:
    """
    Annotation of a recording written by ``cmd_annotate``

    Raises:
        DatasetLayoutError: no annotation file
        FingerprintMismatchError: annotation made under other settings
    """
    path = layout.annotation(kind, ref.recording_id)
    if not path.is_file():
        raise DatasetLayoutError(path, "annotation missing; run annotate first")
    seq = read_annotation_jsonl(path)
    if seq.fingerprint != fingerprint:
        raise FingerprintMismatchError(fingerprint, seq.fingerprint or "", path)
    return seq


def support_label_map(
    sequences: Sequence[AnnotationSequence],
    ground_truth: Sequence[Sequence[GroundTruthEvent]],
    template_ids: Sequence[int],
) -> LabelMap:
    """Label map from support annotations and their ground truth, pooled over recordings"""
    grouped: Dict[int, List[str]] = {}
    for seq, gt in zip(sequences, ground_truth):
        for tid, labels in group_labels_by_template(seq, assign_support_labels(seq, gt)).items():
            grouped.setdefault(tid, []).extend(labels)
    return build_label_map(grouped, template_ids)


def _metrics_row(
    individual: str,
    pairs: Sequence[Tuple[AnnotationSequence, Sequence[GroundTruthEvent]]],
    label_map: LabelMap,
    n_templates: int,
    gt_labels: set,
    iou_min: float,
) -> MetricsRow:
    detection, classification = evaluate_recordings(pairs, label_map, iou_min)
    return MetricsRow(
        individual=individual,
        detection_precision=detection.precision,
        detection_recall=detection.recall,
        micro_precision=classification.micro_precision,
        weighted_precision=classification.weighted_precision,
        weighted_recall=classification.weighted_recall,
        n_templates=float(n_templates),
        n_gt_syllables=len(gt_labels),
        n_detections=detection.n_detections,
        n_gt_events=detection.n_ground_truth,
    )


def cmd_eval(
    config: PipelineConfig,
    split: Optional[SupportQuerySplit] = None,
    workers: Optional[int] = None,
) -> MetricsReport:
    """
    Score query annotations against ground truth

    The label map of every unit comes from its support annotations. The
    bag-of-syllables block, the occurrence profile and template sharing are
    computed when one template set is shared by two or more individuals.

    Raises:
        MissingGroundTruthError: a recording has no ground-truth file
    """
    split = split or prepare_split(config)
    layout = output_layout(config)
    fingerprint = config_fingerprint(config)
    iou_min = config.eval.iou_min

    rows: List[MetricsRow] = []
    shared: Optional[Tuple[TemplateSet, Dict[str, List[AnnotationSequence]]]] = None
    units = fitting_units(split, config.mode)
    for unit, individuals in units.items():
        ts, _ = load_templates(layout.refined_templates(unit), expected_fingerprint=fingerprint)
        support_refs = _unit_refs(split.support, individuals)
        support_seqs = [read_annotation(layout, "support", ref, fingerprint) for ref in support_refs]
        support_gt = ordered_map(load_ground_truth, support_refs, workers)
        label_map = support_label_map(support_seqs, support_gt, ts.ids)
        logger.info("Label map built", unit=unit, templates=len(ts), labelled=sum(1 for tid in ts.ids if label_map[tid] != EMPTY_LABEL))

        query_by_individual: Dict[str, List[AnnotationSequence]] = {}
        for individual in individuals:
            query_refs = _unit_refs(split.query, [individual])
            query_seqs = [read_annotation(layout, "query", ref, fingerprint) for ref in query_refs]
            query_gt = ordered_map(load_ground_truth, query_refs, workers)
            gt_labels = {ev.label for events in query_gt for ev in events}
            gt_labels |= {ev.label for ref, events in zip(support_refs, support_gt) if ref.individual == individual for ev in events}
            rows.append(_metrics_row(individual, list(zip(query_seqs, query_gt)), label_map, len(ts), gt_labels, iou_min))
            query_by_individual[individual] = query_seqs

        if len(units) == 1 and len(individuals) >= 2:
            shared = (ts, query_by_individual)

    report = MetricsReport(
        fingerprint=fingerprint,
        mode=config.mode,
        seed=split.seed,
        support_minutes=split.support_minutes,
        iou_min=iou_min,
        rows=rows,
        average=average_row(rows),
    )
    if shared is not None:
        report = _with_song_level_metrics(report, config, layout, *shared)

    write_report(report, layout.root)
    logger.info("Report written", path=str(layout.root), individuals=len(rows))
    return report


def _with_song_level_metrics(
    report: MetricsReport,
    config: PipelineConfig,
    layout: OutputLayout,
    ts: TemplateSet,
    sequences: Dict[str, List[AnnotationSequence]],
) -> MetricsReport:
    songs = sorted(
        ((seq.recording_id, individual, seq) for individual, seqs in sequences.items() for seq in seqs),
        key=lambda item: item[0],
    )
    edges = bos_edges(config.eval)
    vectors = [bag_of_syllables(seq, ts.ids, edges) for _, _, seq in songs]
    labels = [individual for _, individual, _ in songs]
    retrieval = retrieval_map(vectors, labels, k=config.eval.map_k)
    bos = BosBlock(
        map=retrieval.map,
        map_at_k=retrieval.map_at_k,
        k=config.eval.map_k,
        skipped_queries=[songs[index][0] for index in retrieval.skipped_queries],
        n_songs=len(songs),
    )

    coords = bos_projection(vectors)
    write_projection_csv(
        [(rec_id, individual, coords[index, 0], coords[index, 1]) for index, (rec_id, individual, _) in enumerate(songs)],
        layout.root / PROJECTION_CSV,
    )

    profile = template_occurrence_profile(sequences, ts.ids)
    occurrence = OccurrenceBlock(
        individuals=list(profile.individuals),
        template_ids=list(profile.template_ids),
        frequencies=profile.frequencies.tolist(),
        empty_rows=list(profile.empty_rows),
    )
    return report.model_copy(
        update={"bos": bos, "occurrence_profile": occurrence, "template_sharing": template_sharing(profile)}
    )


def run_pipeline(config: PipelineConfig, workers: Optional[int] = None) -> MetricsReport:
    """Fit, annotate and evaluate on one split"""
    split = prepare_split(config)
    cmd_fit(config, split, workers)
    cmd_annotate(config, split, workers)
    return cmd_eval(config, split, workers)


def cmd_synth(corpus_cfg: SynthCorpusConfig, root: Path) -> Dict[str, Path]:
    """Generate a synthetic corpus and write it in the flat dataset layout"""
    return write_corpus(generate_corpus(corpus_cfg), root)
