"""
Matching pursuit - greedy template placement and iterative refinement

A spectrogram (in dB above floor) is explained as a sum of unit-gain
template placements. Every greedy round scores all placements on the
current residual, keeps the local maxima of the best score over time,
accepts them under the collar rule and subtracts them, clipping the
residual at zero.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage, signal

from ..models.annotation_types import AnnotationSequence, Detection
from ..models.cluster_types import ClusterAssignment, Template, TemplateSet
from ..models.config_types import DetectionConfig, HdbscanConfig, MpConfig
from ..models.signal_types import Spectrogram
from ..utils.logging_config import get_logger
from ..utils.worker_pool import ordered_map
from .clustering import split_clusters
from .event_detection import EIGHT_CONNECTIVITY
from .pipeline_errors import InvariantViolationError, TemplateShapeError
from .templates import build_templates, merge_templates

logger = get_logger(__name__)

# relative slack of the per-step descent check
DESCENT_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Annotation plus the final residual of one recording"""
    sequence: AnnotationSequence
    residual: np.ndarray


@dataclass(frozen=True)
class Placement:
    """Candidate template placement"""
    index: int  # position of the template in the set
    t: int
    f: int
    score: float


def default_collar(ts: TemplateSet) -> int:
    """Half the median template duration, at least one column"""
    return max(1, int(ts.median_duration() // 2))


def frequency_offsets(n_freq: int, n_rows: int, cfg: MpConfig) -> np.ndarray:
    """Row offsets searched for templates of ``n_rows`` rows"""
    last = n_freq - n_rows
    if last < 0:
        return np.zeros(0, dtype=np.int64)
    low, high = cfg.freq_search if cfg.freq_search is not None else (0, last)
    return np.arange(max(low, 0), min(high, last) + 1, cfg.freq_stride, dtype=np.int64)


def score_map(
    residual: np.ndarray,
    template: Template,
    freq_search: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Decrease of ``||R||^2`` for every placement of one template

    Delta(t, f) = 2 <R[f:f+rows, t:t+cols], T> - ||T||^2, by valid-mode
    cross-correlation of the residual with the template.

    Args:
        residual: Residual matrix ``[n_freq x n_time]``
        template: Template to place
        freq_search: Row offsets to score (None = every valid offset)

    Returns:
        Matrix ``[len(freq_search) x (n_time - cols + 1)]`` indexed [f_index, t]

    Raises:
        TemplateShapeError: template larger than the residual
        ValueError: an offset places the template outside the residual
    """
    rows, cols = template.shape
    n_freq, n_time = residual.shape
    if rows > n_freq or cols > n_time:
        raise TemplateShapeError(f"Template {template.shape} larger than residual {residual.shape}")

    correlation = signal.correlate(residual, template.matrix, mode="valid")
    delta = 2.0 * correlation - template.energy
    if freq_search is None:
        return delta
    offsets = np.asarray(freq_search, dtype=np.int64)
    if offsets.size and (offsets.min() < 0 or offsets.max() > n_freq - rows):
        raise ValueError(f"Frequency offsets must lie in [0, {n_freq - rows}]")
    return delta[offsets]


def _window(residual: np.ndarray, template: Template, t: int, f: int) -> Tuple[slice, slice]:
    rows, cols = template.shape
    return slice(f, f + rows), slice(t, t + cols)


def subtract_placement(residual: np.ndarray, template: Template, t: int, f: int) -> float:
    """Subtract one placement in place, clipping at zero; returns the actual decrease of ``||R||^2``"""
    window = _window(residual, template, t, f)
    before = residual[window]
    after = np.maximum(before - template.matrix, 0.0)
    decrease = float(np.sum(before * before) - np.sum(after * after))
    residual[window] = after
    return decrease


def _live_delta(residual: np.ndarray, template: Template, t: int, f: int) -> float:
    window = residual[_window(residual, template, t, f)]
    return 2.0 * float(np.sum(window * template.matrix)) - template.energy


def detection_extent(
    spec: Spectrogram,
    template: Template,
    t: int,
    f: int,
) -> Tuple[float, float, float, float]:
    """(onset_s, offset_s, low_hz, high_hz) of a placement from the template's active cells"""
    columns = template.active_columns
    rows = template.active_rows
    onset = (t + int(columns[0])) * spec.time_step
    offset = (t + int(columns[-1]) + 1) * spec.time_step
    low_hz = float(spec.freq_axis[f + int(rows[0])])
    high_hz = float(spec.freq_axis[f + int(rows[-1])])
    return onset, offset, low_hz, high_hz


class _ScoreBoard:
    """Score maps of every template, refreshed only where the residual changed"""

    def __init__(self, residual: np.ndarray, templates: Sequence[Template], offsets: np.ndarray):
        self.residual = residual
        self.templates = templates
        self.offsets = offsets
        self.cols = templates[0].shape[1]
        self.n_positions = residual.shape[1] - self.cols + 1
        self.scores = np.stack([score_map(residual, tpl, offsets) for tpl in templates])

    def refresh(self, start: int, stop: int) -> None:
        """Recompute scores for positions ``start..stop`` (inclusive)"""
        start = max(start, 0)
        stop = min(stop, self.n_positions - 1)
        if stop < start:
            return
        segment = self.residual[:, start:stop + self.cols]
        for index, tpl in enumerate(self.templates):
            self.scores[index, :, start:stop + 1] = score_map(segment, tpl, self.offsets)

    def best(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per position: best score, template index and offset index (lowest template, then offset, on ties)"""
        n_templates, n_offsets, _ = self.scores.shape
        flat = self.scores.reshape(n_templates * n_offsets, -1)
        arg = np.argmax(flat, axis=0)
        best = flat[arg, np.arange(flat.shape[1])]
        return best, arg // n_offsets, arg % n_offsets


def _merge_ranges(ranges: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
    merged: List[Tuple[int, int]] = []
    for start, stop in sorted(ranges):
        if merged and start <= merged[-1][1] + 1:
            merged[-1] = (merged[-1][0], max(merged[-1][1], stop))
        else:
            merged.append((start, stop))
    return merged


def _round_candidates(board: _ScoreBoard, thresholds: np.ndarray, collar: int) -> List[Placement]:
    """Local maxima of the best score that clear their template's threshold"""
    best, template_index, offset_index = board.best()
    pooled = ndimage.maximum_filter1d(best, size=max(3, 2 * collar - 1), mode="constant", cval=-np.inf)
    peaks = np.flatnonzero((best == pooled) & (best >= thresholds[template_index]))
    candidates = [
        Placement(int(template_index[t]), int(t), int(board.offsets[offset_index[t]]), float(best[t]))
        for t in peaks
    ]
    candidates.sort(key=lambda cand: (-cand.score, cand.t))
    return candidates


def decompose(
    spec: Spectrogram,
    ts: TemplateSet,
    cfg: MpConfig,
    recording_id: str = "",
) -> Decomposition:
    """
    Greedy matching pursuit of one spectrogram

    Returns the annotation and the final residual; see ``greedy_decompose``.
    """
    if len(ts) == 0:
        raise ValueError("greedy_decompose needs a non-empty template set")

    signal_values = spec.above_floor()
    residual = signal_values.copy()
    signal_norm = float(np.linalg.norm(signal_values))
    templates = list(ts)
    rows, cols = ts.shape
    offsets = frequency_offsets(spec.n_freq, rows, cfg)

    if cols > spec.n_time or offsets.size == 0:
        logger.debug("Spectrogram smaller than templates", recording_id=recording_id, shape=spec.values.shape)
        sequence = AnnotationSequence(
            recording_id=recording_id, detections=[], residual_norm=signal_norm, signal_norm=signal_norm
        )
        return Decomposition(sequence=sequence, residual=residual)

    collar = cfg.collar if cfg.collar is not None else default_collar(ts)
    energies = np.array([tpl.energy for tpl in templates])
    thresholds = cfg.min_rel_score * energies
    board = _ScoreBoard(residual, templates, offsets)

    detections: List[Detection] = []
    round_index = 0
    residual_sq = float(np.sum(residual * residual))
    while True:
        accepted: List[Placement] = []
        for candidate in _round_candidates(board, thresholds, collar):
            if any(abs(candidate.t - other.t) < collar for other in accepted):
                continue
            template = templates[candidate.index]
            if _live_delta(residual, template, candidate.t, candidate.f) < thresholds[candidate.index]:
                continue

            decrease = subtract_placement(residual, template, candidate.t, candidate.f)
            updated_sq = float(np.sum(residual * residual))
            if decrease < thresholds[candidate.index] * (1 - DESCENT_TOLERANCE) or updated_sq > residual_sq * (1 + DESCENT_TOLERANCE):
                raise InvariantViolationError(
                    "monotone_descent",
                    f"placement of template {template.id} at t={candidate.t} decreased ||R||^2 by {decrease}",
                )
            residual_sq = updated_sq

            onset, offset, low_hz, high_hz = detection_extent(spec, template, candidate.t, candidate.f)
            detections.append(
                Detection(
                    template_id=template.id,
                    t=candidate.t,
                    f=candidate.f,
                    score=decrease,
                    onset_s=onset,
                    offset_s=offset,
                    low_hz=low_hz,
                    high_hz=high_hz,
                    rank=len(detections),
                    round=round_index,
                )
            )
            accepted.append(candidate)

        if not accepted:
            break
        changed = _merge_ranges([(p.t - cols + 1 - collar, p.t + cols - 1 + collar) for p in accepted])
        for start, stop in changed:
            board.refresh(start, stop)
        round_index += 1

    detections.sort(key=lambda det: (det.t, det.rank))
    sequence = AnnotationSequence(
        recording_id=recording_id,
        detections=detections,
        residual_norm=float(np.linalg.norm(residual)),
        signal_norm=signal_norm,
    )
    logger.debug(
        "Decomposed recording",
        recording_id=recording_id,
        detections=len(detections),
        rounds=round_index,
        collar=collar,
        residual_norm=sequence.residual_norm,
    )
    return Decomposition(sequence=sequence, residual=residual)


def greedy_decompose(
    spec: Spectrogram,
    ts: TemplateSet,
    cfg: MpConfig,
    recording_id: str = "",
) -> AnnotationSequence:
    """
    Decompose a spectrogram into template placements

    Each round accepts the collar-separated local maxima of
    M(t) = max over templates and offsets of Delta, highest first, re-scoring
    every candidate on the live residual; candidates that no longer clear
    ``min_rel_score * ||T||^2`` wait for the next round. The loop ends when a
    round accepts nothing.

    Args:
        spec: Spectrogram to annotate
        ts: Non-empty template set
        cfg: Matching pursuit configuration
        recording_id: Identifier stored in the sequence

    Returns:
        Detections sorted by t with the final residual norm

    Raises:
        InvariantViolationError: an accepted placement failed to decrease the residual
    """
    return decompose(spec, ts, cfg, recording_id).sequence


def replay_residual(values: np.ndarray, ts: TemplateSet, detections: Sequence[Detection]) -> np.ndarray:
    """Residual recomputed from scratch by applying placements in acceptance order"""
    residual = np.array(values, dtype=np.float64, copy=True)
    for det in sorted(detections, key=lambda d: d.rank):
        subtract_placement(residual, ts.get(det.template_id), det.t, det.f)
    return residual


def postprocess(seq: AnnotationSequence, ts: TemplateSet) -> AnnotationSequence:
    """Drop detections of templates lasting at most one time column"""
    short = {tpl.id for tpl in ts if tpl.duration <= 1}
    if not short:
        return seq
    kept = [det for det in seq.detections if det.template_id not in short]
    return seq.model_copy(update={"detections": kept})


def matched_patch(
    signal_values: np.ndarray,
    template: Template,
    det: Detection,
    eta: float,
) -> np.ndarray:
    """
    Signal window of a detection, masked like an event patch

    Keeps the super-threshold 8-connected components of the window that
    touch the template's support; everything else is zero.
    """
    window = signal_values[_window(signal_values, template, det.t, det.f)]
    labels, _ = ndimage.label(window >= eta, structure=EIGHT_CONNECTIVITY)
    touching = np.unique(labels[(template.matrix > 0) & (labels > 0)])
    return np.where(np.isin(labels, touching), window, 0.0)


def relearn_templates(
    spectrograms: Sequence[Spectrogram],
    sequences: Sequence[AnnotationSequence],
    ts: TemplateSet,
    detect_cfg: DetectionConfig,
    cluster_cfg: HdbscanConfig,
    merge_h: float,
) -> TemplateSet:
    """Split, rebuild and merge templates from the patches matched in the last decomposition"""
    patches: List[np.ndarray] = []
    parents: List[int] = []
    for spec, seq in zip(spectrograms, sequences):
        signal_values = spec.above_floor()
        for det in seq.detections:
            patches.append(matched_patch(signal_values, ts.get(det.template_id), det, detect_cfg.eta))
            parents.append(det.template_id)
    if not patches:
        return TemplateSet(())

    used_ids = sorted(set(parents))
    label_of = {tid: index for index, tid in enumerate(used_ids)}
    stack = np.stack(patches)
    assignment = ClusterAssignment(np.array([label_of[tid] for tid in parents], dtype=np.int64))
    split = split_clusters(stack.reshape(stack.shape[0], -1), assignment, cluster_cfg)
    rebuilt = build_templates(stack, split)
    members: Dict[int, np.ndarray] = {tid: stack[split.members(tid)] for tid in rebuilt.ids}
    return merge_templates(rebuilt, merge_h, members)


def refine(
    recordings: Sequence[Spectrogram],
    ts: TemplateSet,
    cfg: MpConfig,
    cluster_cfg: HdbscanConfig,
    detect_cfg: Optional[DetectionConfig] = None,
    merge_h: float = 0.33,
    recording_ids: Optional[Sequence[str]] = None,
    workers: Optional[int] = None,
) -> Tuple[TemplateSet, List[AnnotationSequence]]:
    """
    Alternate matching pursuit and template relearning

    Every round but the last decomposes all recordings, gathers the matched
    patches and relearns templates by split, median and merge. The final
    round's annotations are returned postprocessed. When relearning leaves
    no template, the previous round's result is returned.

    Args:
        recordings: Spectrograms to annotate
        ts: Initial templates
        cfg: Matching pursuit configuration (``max_iters_outer`` rounds)
        cluster_cfg: HDBSCAN settings of the split stage
        detect_cfg: Detection settings (threshold of matched patches)
        merge_h: Merge threshold
        recording_ids: Identifiers, defaults to positional indices
        workers: Worker pool size

    Returns:
        (final templates, postprocessed annotations)
    """
    detect_cfg = detect_cfg or DetectionConfig()
    ids = list(recording_ids) if recording_ids is not None else [str(i) for i in range(len(recordings))]
    if len(ids) != len(recordings):
        raise ValueError("recording_ids and recordings differ in length")

    current = ts
    sequences: List[AnnotationSequence] = []
    for round_number in range(1, cfg.max_iters_outer + 1):
        sequences = ordered_map(
            lambda item: greedy_decompose(item[0], current, cfg, item[1]),
            list(zip(recordings, ids)),
            workers,
        )
        logger.info(
            "Refinement round decomposed",
            round=round_number,
            templates=len(current),
            detections=sum(len(seq) for seq in sequences),
        )
        if round_number == cfg.max_iters_outer:
            break

        relearned = relearn_templates(recordings, sequences, current, detect_cfg, cluster_cfg, merge_h)
        if len(relearned) == 0:
            logger.warning("Refinement left no template, keeping previous round", round=round_number)
            break
        current = relearned

    return current, [postprocess(seq, current) for seq in sequences]
