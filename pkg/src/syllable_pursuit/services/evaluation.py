"""
Evaluation - annotation metrics, label maps and bag-of-syllables retrieval

Detections are matched to ground-truth syllables one-to-one by interval IoU.
Detection precision/recall ignore classes; classification metrics compare
the label each template maps to with the matched ground-truth label.
"""

from collections import Counter
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.metrics import precision_recall_fscore_support

from ..models.annotation_types import (
    EMPTY_LABEL,
    AnnotationSequence,
    BosVector,
    ClassificationScores,
    Detection,
    DetectionScores,
    GroundTruthEvent,
    LabelMap,
    OccurrenceProfile,
    RetrievalScores,
)
from ..models.config_types import EvalConfig
from ..utils.logging_config import get_logger
from .clustering import fit_pca, project

logger = get_logger(__name__)

# stand-in class of unmatched samples in the confusion pairs
MISSING = "\x00missing"
SHARING_THRESHOLD = 0.05

DetectionsLike = Union[AnnotationSequence, Sequence[Detection]]


def _detections(dets: DetectionsLike) -> List[Detection]:
    return list(dets.detections) if isinstance(dets, AnnotationSequence) else list(dets)


def assign_support_labels(dets: DetectionsLike, gt: Sequence[GroundTruthEvent]) -> List[str]:
    """
    Ground-truth label of every detection

    A detection takes the label of the event whose interval contains its
    temporal midpoint; with several candidates the greatest overlap wins,
    then the earliest onset. Detections in silence get EMPTY.
    """
    labels: List[str] = []
    for det in _detections(dets):
        midpoint = det.midpoint_s
        best: Optional[Tuple[float, float, str]] = None
        for event in gt:
            if not event.onset <= midpoint <= event.offset:
                continue
            overlap = min(det.offset_s, event.offset) - max(det.onset_s, event.onset)
            key = (-overlap, event.onset, event.label)
            if best is None or key < best:
                best = key
        labels.append(best[2] if best is not None else EMPTY_LABEL)
    return labels


def group_labels_by_template(dets: DetectionsLike, labels: Sequence[str]) -> Dict[int, List[str]]:
    """Support labels grouped by the template of their detection"""
    grouped: Dict[int, List[str]] = {}
    for det, label in zip(_detections(dets), labels):
        grouped.setdefault(det.template_id, []).append(label)
    return grouped


def build_label_map(
    grouped: Mapping[int, Sequence[str]],
    template_ids: Optional[Iterable[int]] = None,
) -> LabelMap:
    """
    Majority label per template

    Ties prefer a non-EMPTY label, then the lexicographically smallest.
    Templates without support detections map to EMPTY.
    """
    ids = sorted(set(grouped) | set(template_ids or ()))
    mapping: Dict[int, str] = {}
    for template_id in ids:
        counts = Counter(grouped.get(template_id, ()))
        if not counts:
            mapping[template_id] = EMPTY_LABEL
            continue
        mapping[template_id] = min(counts, key=lambda label: (-counts[label], label == EMPTY_LABEL, label))
    return LabelMap(mapping=mapping)


def interval_iou(a_start: float, a_end: float, b_start: float, b_end: float) -> float:
    """Intersection over union of two time intervals"""
    intersection = min(a_end, b_end) - max(a_start, b_start)
    if intersection <= 0:
        return 0.0
    union = max(a_end, b_end) - min(a_start, b_start)
    return intersection / union


def match_events(
    dets: DetectionsLike,
    gt: Sequence[GroundTruthEvent],
    iou_min: float,
) -> List[Tuple[int, int]]:
    """
    Greedy one-to-one matching in descending IoU

    Ties go to the lower detection index, then the lower event index.

    Returns:
        (detection index, event index) pairs with IoU >= ``iou_min``
    """
    detections = _detections(dets)
    pairs = []
    for i, det in enumerate(detections):
        for j, event in enumerate(gt):
            iou = interval_iou(det.onset_s, det.offset_s, event.onset, event.offset)
            if iou >= iou_min and iou > 0:
                pairs.append((-iou, i, j))
    pairs.sort()

    used_dets, used_gt = set(), set()
    matches: List[Tuple[int, int]] = []
    for _, i, j in pairs:
        if i in used_dets or j in used_gt:
            continue
        used_dets.add(i)
        used_gt.add(j)
        matches.append((i, j))
    return sorted(matches)


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def scores_from_counts(true_positives: int, n_detections: int, n_ground_truth: int) -> DetectionScores:
    """Detection scores from pooled counts"""
    return DetectionScores(
        precision=_ratio(true_positives, n_detections),
        recall=_ratio(true_positives, n_ground_truth),
        true_positives=true_positives,
        n_detections=n_detections,
        n_ground_truth=n_ground_truth,
    )


def detection_pr(dets: DetectionsLike, gt: Sequence[GroundTruthEvent], iou_min: float) -> DetectionScores:
    """
    Class-agnostic detection precision and recall

    Precision is None without detections, recall None without ground truth.
    """
    matches = match_events(dets, gt, iou_min)
    return scores_from_counts(len(matches), len(_detections(dets)), len(gt))


def classification_samples(
    dets: DetectionsLike,
    predicted: Sequence[str],
    gt: Sequence[GroundTruthEvent],
    iou_min: float,
) -> Tuple[List[str], List[str]]:
    """
    (actual, predicted) label pairs of one recording

    Matched pairs compare the mapped label with the event label. Detections
    mapped to EMPTY abstain, so the event they matched becomes a false
    negative. Unmatched detections are false positives of their label and
    unmatched events false negatives of theirs.
    """
    detections = _detections(dets)
    if len(predicted) != len(detections):
        raise ValueError("one predicted label per detection is required")

    matches = dict(match_events(detections, gt, iou_min))
    matched_gt = set(matches.values())
    actual: List[str] = []
    guessed: List[str] = []
    for i, label in enumerate(predicted):
        if i in matches:
            actual.append(gt[matches[i]].label)
            guessed.append(MISSING if label == EMPTY_LABEL else label)
        elif label != EMPTY_LABEL:
            actual.append(MISSING)
            guessed.append(label)
    for j, event in enumerate(gt):
        if j not in matched_gt:
            actual.append(event.label)
            guessed.append(MISSING)
    return actual, guessed


def scores_from_samples(actual: Sequence[str], predicted: Sequence[str]) -> ClassificationScores:
    """Micro precision and support-weighted precision/recall from label pairs"""
    classes = sorted((set(actual) | set(predicted)) - {MISSING})
    if not classes:
        return ClassificationScores()

    n_predictions = sum(1 for label in predicted if label != MISSING)
    n_actual = sum(1 for label in actual if label != MISSING)
    micro = None
    if n_predictions:
        micro, _, _, _ = precision_recall_fscore_support(
            actual, predicted, labels=classes, average="micro", zero_division=0
        )
    weighted_precision = weighted_recall = None
    if n_actual:
        weighted_precision, weighted_recall, _, _ = precision_recall_fscore_support(
            actual, predicted, labels=classes, average="weighted", zero_division=0
        )
    return ClassificationScores(
        micro_precision=None if micro is None else float(micro),
        weighted_precision=None if weighted_precision is None else float(weighted_precision),
        weighted_recall=None if weighted_recall is None else float(weighted_recall),
    )


def classification_metrics(
    dets: DetectionsLike,
    predicted: Sequence[str],
    gt: Sequence[GroundTruthEvent],
    iou_min: float,
) -> ClassificationScores:
    """
    Class-aware scores of one annotation

    Args:
        dets: Detections
        predicted: Mapped label per detection (``LabelMap[template_id]``)
        gt: Ground-truth events
        iou_min: Matching IoU threshold

    Returns:
        Micro precision, weighted precision and weighted recall (weights = class support in ``gt``)
    """
    actual, guessed = classification_samples(dets, predicted, gt, iou_min)
    return scores_from_samples(actual, guessed)


def evaluate_recordings(
    pairs: Sequence[Tuple[AnnotationSequence, Sequence[GroundTruthEvent]]],
    label_map: LabelMap,
    iou_min: float,
) -> Tuple[DetectionScores, ClassificationScores]:
    """Detection and classification scores pooled over several recordings"""
    true_positives = n_detections = n_ground_truth = 0
    actual: List[str] = []
    guessed: List[str] = []
    for seq, gt in pairs:
        true_positives += len(match_events(seq, gt, iou_min))
        n_detections += len(seq)
        n_ground_truth += len(gt)
        predicted = [label_map[det.template_id] for det in seq.detections]
        rec_actual, rec_guessed = classification_samples(seq, predicted, gt, iou_min)
        actual.extend(rec_actual)
        guessed.extend(rec_guessed)
    return scores_from_counts(true_positives, n_detections, n_ground_truth), scores_from_samples(actual, guessed)


def bos_edges(cfg: EvalConfig) -> np.ndarray:
    """Bag-of-syllables frequency bin edges"""
    if cfg.bos_edges_hz is not None:
        return np.asarray(cfg.bos_edges_hz, dtype=np.float64)
    low, high = cfg.bos_band_hz
    return np.geomspace(low, high, cfg.bos_bins + 1)


def bag_of_syllables(
    seq: DetectionsLike,
    templates: Union[int, Sequence[int]],
    freq_bin_edges: Sequence[float],
) -> BosVector:
    """
    Count detections per (template, frequency bin)

    Args:
        seq: Detections of one song
        templates: Template ids, or a count meaning ids ``0..n-1``
        freq_bin_edges: Increasing bin edges in Hz; center frequencies outside are clamped

    Returns:
        BosVector whose total equals the detection count
    """
    template_ids = tuple(range(templates)) if isinstance(templates, int) else tuple(templates)
    edges = np.asarray(freq_bin_edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("freq_bin_edges must hold at least two increasing values")
    n_bins = edges.size - 1
    row_of = {tid: index for index, tid in enumerate(template_ids)}

    counts = np.zeros((len(template_ids), n_bins), dtype=np.int64)
    for det in _detections(seq):
        if det.template_id not in row_of:
            raise ValueError(f"Detection references unknown template {det.template_id}")
        column = int(np.clip(np.searchsorted(edges, det.center_hz, side="right") - 1, 0, n_bins - 1))
        counts[row_of[det.template_id], column] += 1
    return BosVector(counts=counts, template_ids=template_ids, edges_hz=edges)


def _as_matrix(vectors: Sequence[Union[BosVector, np.ndarray]]) -> np.ndarray:
    return np.stack(
        [v.vector if isinstance(v, BosVector) else np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    )


def average_precision(relevant: np.ndarray, k: Optional[int] = None) -> float:
    """
    Average precision of one ranked relevance list

    With ``k`` the list is truncated and the sum divided by min(k, R).
    """
    n_relevant = int(relevant.sum())
    if n_relevant == 0:
        return 0.0
    hits = relevant if k is None else relevant[:k]
    ranks = np.flatnonzero(hits) + 1
    precision_at_hits = np.arange(1, ranks.size + 1) / ranks
    denominator = n_relevant if k is None else min(k, n_relevant)
    return float(precision_at_hits.sum() / denominator)


def retrieval_map(
    vectors: Sequence[Union[BosVector, np.ndarray]],
    labels: Sequence[str],
    k: Optional[int] = None,
) -> RetrievalScores:
    """
    Retrieval mean average precision

    Every vector queries all others ranked by Euclidean distance (ties by
    index); a result is relevant when it shares the query's label. Queries
    whose label has no other member are skipped and listed.
    """
    if len(vectors) != len(labels):
        raise ValueError("one label per vector is required")
    if not vectors:
        return RetrievalScores(k=k)

    data = _as_matrix(vectors)
    label_array = np.asarray(labels, dtype=object)
    counts = Counter(labels)
    indices = np.arange(len(labels))

    aps: List[float] = []
    aps_at_k: List[float] = []
    skipped: List[int] = []
    for query in indices:
        if counts[labels[query]] < 2:
            skipped.append(int(query))
            continue
        others = indices[indices != query]
        distances = np.linalg.norm(data[others] - data[query], axis=1)
        ranked = others[np.argsort(distances, kind="stable")]
        relevant = label_array[ranked] == labels[query]
        aps.append(average_precision(relevant))
        if k is not None:
            aps_at_k.append(average_precision(relevant, k))

    if skipped:
        logger.info("Retrieval queries skipped", skipped=len(skipped), reason="single-member label")
    return RetrievalScores(
        map=float(np.mean(aps)) if aps else None,
        map_at_k=float(np.mean(aps_at_k)) if aps_at_k else None,
        k=k,
        skipped_queries=skipped,
    )


def template_occurrence_profile(
    sequences: Mapping[str, Sequence[AnnotationSequence]],
    template_ids: Optional[Sequence[int]] = None,
) -> OccurrenceProfile:
    """
    Relative template usage per individual

    Rows sum to one; individuals without detections get an all-zero row and
    are listed in ``empty_rows``.
    """
    individuals = tuple(sorted(sequences))
    if template_ids is None:
        template_ids = sorted({det.template_id for seqs in sequences.values() for seq in seqs for det in seq.detections})
    ids = tuple(template_ids)
    column_of = {tid: index for index, tid in enumerate(ids)}

    counts = np.zeros((len(individuals), len(ids)), dtype=np.float64)
    for row, individual in enumerate(individuals):
        for seq in sequences[individual]:
            for det in seq.detections:
                counts[row, column_of[det.template_id]] += 1

    totals = counts.sum(axis=1, keepdims=True)
    frequencies = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    empty = tuple(ind for ind, total in zip(individuals, totals[:, 0]) if total == 0)
    return OccurrenceProfile(individuals=individuals, template_ids=ids, frequencies=frequencies, empty_rows=empty)


def template_sharing(profile: OccurrenceProfile, threshold: float = SHARING_THRESHOLD) -> Optional[float]:
    """Mean number of individuals in which a template makes up at least ``threshold`` of the detections"""
    if not profile.template_ids:
        return None
    return float(np.mean((profile.frequencies >= threshold).sum(axis=0)))


def bos_projection(vectors: Sequence[Union[BosVector, np.ndarray]]) -> np.ndarray:
    """First two principal coordinates of the BoS vectors (zero-padded when fewer exist)"""
    data = _as_matrix(vectors) if len(vectors) else np.zeros((0, 2))
    coords = np.zeros((data.shape[0], 2))
    n_components = min(2, data.shape[0], data.shape[1])
    if data.shape[0] < 2 or n_components < 1:
        return coords
    model = fit_pca(data, n_components)
    coords[:, :n_components] = project(model, data).reshape(data.shape[0], n_components)
    return coords
