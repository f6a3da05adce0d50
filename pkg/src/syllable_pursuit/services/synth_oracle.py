"""
Synthetic recordings with known prototypes and placements

Everything happens in the spectrogram domain: prototypes are parametric
curves rasterized with Gaussian cross-sections, placed on a silent grid with
guaranteed gaps and covered by clipped Gaussian noise. The generating truth
gives every pipeline stage an oracle.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..models.annotation_types import (
    AnnotationSequence,
    ClassificationScores,
    Detection,
    DetectionScores,
    GroundTruthEvent,
    LabelMap,
)
from ..models.cluster_types import Template, TemplateSet
from ..models.config_types import DetectionConfig
from ..models.signal_types import Spectrogram
from ..models.synth_types import Placement, SynthConfig, SynthCorpus, SynthCorpusConfig, SynthTruth
from ..storage.annotation_io import save_spectrogram_npz, write_annotation_csv, write_ground_truth_csv
from ..storage.template_archive import save_templates
from ..utils.logging_config import get_logger
from .evaluation import classification_metrics, detection_pr
from .event_detection import detect_events
from .matching_pursuit import detection_extent, replay_residual
from .pipeline_errors import SynthGridError
from .templates import template_distance

logger = get_logger(__name__)

CROSS_SECTION_SIGMA = 2.0
# cells below this fraction of the amplitude are zeroed
SUPPORT_CUTOFF = 0.3
HARMONIC_SPACING = 4
# per prototype, before the bank is redrawn
MAX_PROTOTYPE_ATTEMPTS = 300
MAX_BANK_RESTARTS = 50


def _round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def rasterize(centers: Sequence[Sequence[float]], cols: Sequence[int], shape: Tuple[int, int], amplitude: float) -> np.ndarray:
    """
    Render curves given by per-column center rows

    Args:
        centers: One list of center rows per column in ``cols``
        cols: Columns covered by the curves
        shape: (rows, cols) of the prototype
        amplitude: Peak level

    Returns:
        Matrix with Gaussian cross-sections, zero below the support cutoff
    """
    matrix = np.zeros(shape, dtype=np.float64)
    rows = np.arange(shape[0], dtype=np.float64)
    for col, column_centers in zip(cols, centers):
        for center in column_centers:
            profile = amplitude * np.exp(-((rows - center) ** 2) / (2.0 * CROSS_SECTION_SIGMA ** 2))
            matrix[:, col] = np.maximum(matrix[:, col], profile)
    matrix[matrix < SUPPORT_CUTOFF * amplitude] = 0.0
    return matrix


def _draw_shape(kind: str, cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    n_rows, n_cols = cfg.proto_rows, cfg.proto_cols
    duration = int(rng.integers(n_cols // 2, n_cols + 1))
    start = (n_cols - duration) // 2
    cols = np.arange(start, start + duration)
    position = np.linspace(0.0, 1.0, duration)
    margin = 3.0
    top = n_rows - 1 - margin

    if kind == "ramp":
        low, high = sorted(rng.uniform(margin, top, size=2))
        if rng.random() < 0.5:
            low, high = high, low
        centers = [[low + (high - low) * p] for p in position]
    elif kind == "chevron":
        edge, peak = rng.uniform(margin, top, size=2)
        triangle = 1.0 - np.abs(2.0 * position - 1.0)
        centers = [[edge + (peak - edge) * p] for p in triangle]
    else:
        n_lines = 3
        span = (n_lines - 1) * HARMONIC_SPACING
        highest_base = max(margin, top - span)
        start_row, end_row = rng.uniform(margin, highest_base, size=2)
        centers = [
            [start_row + (end_row - start_row) * p + HARMONIC_SPACING * line for line in range(n_lines)]
            for p in position
        ]
    return rasterize(centers, cols, (n_rows, n_cols), cfg.amplitude)


def _time_centered_frame(matrix: np.ndarray, n_freq: int, base_row: int) -> np.ndarray:
    """Full-band frame at the base row with the energy centroid on a fixed column, as event patches are cut"""
    rows, cols = matrix.shape
    col_centroid = float(np.dot(matrix.sum(axis=0), np.arange(cols)) / matrix.sum())
    canvas = np.zeros((n_freq, 2 * cols), dtype=np.float64)
    origin_t = cols - _round_half_up(col_centroid)
    canvas[base_row:base_row + rows, origin_t:origin_t + cols] = matrix
    return canvas


def _is_distinct(candidate: np.ndarray, base_row: int, accepted: List[Tuple[np.ndarray, int]], cfg: SynthConfig) -> bool:
    frame = _time_centered_frame(candidate, cfg.n_freq, base_row)
    return all(
        template_distance(frame, _time_centered_frame(other, cfg.n_freq, other_row)) >= cfg.min_distance
        for other, other_row in accepted
    )


def _draw_bank(cfg: SynthConfig, rng: np.random.Generator) -> Optional[List[Tuple[np.ndarray, int]]]:
    accepted: List[Tuple[np.ndarray, int]] = []
    attempts = 0
    while len(accepted) < cfg.n_prototypes:
        attempts += 1
        if attempts > MAX_PROTOTYPE_ATTEMPTS:
            return None
        kind = cfg.kinds[len(accepted) % len(cfg.kinds)]
        candidate = _draw_shape(kind, cfg, rng)
        base_row = int(rng.integers(0, cfg.n_freq - cfg.proto_rows + 1))
        if np.any(candidate > 0) and _is_distinct(candidate, base_row, accepted, cfg):
            accepted.append((candidate, base_row))
            attempts = 0
    return accepted


def draw_prototypes(cfg: SynthConfig, rng: np.random.Generator) -> Tuple[Tuple[np.ndarray, ...], Tuple[int, ...]]:
    """
    Draw distinct prototypes and their base rows

    Candidates closer than ``cfg.min_distance`` to an accepted prototype are
    rejected, both compared in the full-band, time-centered frame of event
    patches. A bank stuck on one prototype is discarded and redrawn.

    Raises:
        SynthGridError: not enough distinct prototypes could be drawn
    """
    for restart in range(MAX_BANK_RESTARTS):
        accepted = _draw_bank(cfg, rng)
        if accepted is not None:
            if restart:
                logger.debug("Prototype bank redrawn", restarts=restart)
            return tuple(p for p, _ in accepted), tuple(r for _, r in accepted)
    raise SynthGridError(
        f"could not draw {cfg.n_prototypes} prototypes at distance >= {cfg.min_distance} "
        f"on a {cfg.proto_rows}x{cfg.proto_cols} patch"
    )


def draw_placements(
    cfg: SynthConfig,
    base_rows: Sequence[int],
    rng: np.random.Generator,
    usage: Optional[np.ndarray] = None,
) -> Tuple[Placement, ...]:
    """
    Sample placements separated by at least ``min_gap`` silent columns

    Without ``usage`` prototype ids are balanced; otherwise drawn with the
    given probabilities.

    Raises:
        SynthGridError: the grid cannot hold ``n_events`` placements
    """
    n_events = cfg.n_events
    if n_events == 0:
        return ()
    free = cfg.n_time - n_events * cfg.proto_cols - (n_events - 1) * cfg.min_gap
    if free < 0:
        raise SynthGridError(
            f"{n_events} events of {cfg.proto_cols} columns with gaps >= {cfg.min_gap} do not fit in {cfg.n_time} columns"
        )

    cuts = np.sort(rng.integers(0, free + 1, size=n_events))
    slack = np.diff(np.concatenate([[0], cuts]))
    starts = np.cumsum(slack) + np.arange(n_events) * (cfg.proto_cols + cfg.min_gap)

    n_protos = len(base_rows)
    if usage is None:
        ids = rng.permutation(np.arange(n_events) % n_protos)
    else:
        ids = rng.choice(n_protos, size=n_events, p=usage)

    last_row = cfg.n_freq - cfg.proto_rows
    placements = []
    for start, proto_id in zip(starts, ids):
        shift = int(rng.integers(-cfg.freq_jitter, cfg.freq_jitter + 1)) if cfg.freq_jitter else 0
        row = int(np.clip(base_rows[proto_id] + shift, 0, last_row))
        placements.append(Placement(prototype_id=int(proto_id), t=int(start), f=row))
    return tuple(placements)


def freq_axis(cfg: SynthConfig) -> np.ndarray:
    """Linear row frequencies of the synthetic grid"""
    return np.linspace(cfg.freq_low_hz, cfg.freq_high_hz, cfg.n_freq)


def render(
    cfg: SynthConfig,
    prototypes: Sequence[np.ndarray],
    placements: Sequence[Placement],
    rng: np.random.Generator,
) -> Spectrogram:
    """Sum placed prototypes, add clipped Gaussian noise and lift to the dB floor"""
    canvas = np.zeros((cfg.n_freq, cfg.n_time), dtype=np.float64)
    for placement in placements:
        proto = prototypes[placement.prototype_id]
        rows, cols = proto.shape
        canvas[placement.f:placement.f + rows, placement.t:placement.t + cols] += proto
    if cfg.noise_sigma > 0:
        canvas = np.maximum(canvas + rng.normal(0.0, cfg.noise_sigma, size=canvas.shape), 0.0)
    return Spectrogram(
        values=cfg.db_floor + canvas,
        time_step=cfg.time_step,
        freq_axis=freq_axis(cfg),
        db_floor=cfg.db_floor,
        scale="linear",
    )


def generate(
    cfg: SynthConfig,
    prototypes: Optional[Tuple[Tuple[np.ndarray, ...], Tuple[int, ...]]] = None,
    usage: Optional[np.ndarray] = None,
) -> SynthTruth:
    """
    Generate one synthetic recording

    Args:
        cfg: Synthetic configuration; ``cfg.seed`` fixes every random draw
        prototypes: Shared (prototypes, base rows); drawn from the seed when omitted
        usage: Prototype probabilities (balanced ids when omitted)

    Returns:
        Rendered spectrogram with its prototypes and placements
    """
    rng = np.random.default_rng(cfg.seed)
    if prototypes is None:
        protos, base_rows = draw_prototypes(cfg, rng)
    else:
        protos, base_rows = prototypes
    placements = draw_placements(cfg, base_rows, rng, usage)
    spectrogram = render(cfg, protos, placements, rng)
    return SynthTruth(
        prototypes=tuple(protos),
        placements=placements,
        spectrogram=spectrogram,
        base_rows=tuple(base_rows),
        config=cfg,
    )


def generate_corpus(cfg: SynthCorpusConfig) -> SynthCorpus:
    """
    Multi-individual corpus sharing one prototype bank

    Each individual draws its own prototype usage from a Dirichlet mixed
    half-and-half with the uniform distribution, so every prototype occurs
    everywhere but in different proportions. Recording seeds derive from the
    corpus seed.
    """
    seed_sequence = np.random.SeedSequence(cfg.seed)
    bank_seed, usage_seed, recording_seed = seed_sequence.spawn(3)
    bank = draw_prototypes(cfg.recording, np.random.default_rng(bank_seed))
    n_protos = len(bank[0])

    usage_rng = np.random.default_rng(usage_seed)
    child_seeds = recording_seed.spawn(cfg.n_individuals * cfg.recordings_per_individual)
    recordings: Dict[str, List[Tuple[str, SynthTruth]]] = {}
    for ind_index in range(cfg.n_individuals):
        individual = f"ind{ind_index:02d}"
        dirichlet = usage_rng.dirichlet(np.full(n_protos, cfg.usage_concentration))
        usage = 0.5 * dirichlet + 0.5 / n_protos
        usage = usage / usage.sum()
        songs = []
        for rec_index in range(cfg.recordings_per_individual):
            child = child_seeds[ind_index * cfg.recordings_per_individual + rec_index]
            rec_seed = int(child.generate_state(1)[0])
            rec_cfg = cfg.recording.model_copy(update={"seed": rec_seed})
            recording_id = f"{individual}_rec{rec_index:03d}"
            songs.append((recording_id, generate(rec_cfg, prototypes=bank, usage=usage)))
        recordings[individual] = songs

    logger.info(
        "Synthetic corpus generated",
        individuals=cfg.n_individuals,
        recordings=cfg.n_individuals * cfg.recordings_per_individual,
        prototypes=n_protos,
    )
    return SynthCorpus(prototypes=bank[0], base_rows=bank[1], recordings=recordings, config=cfg)


def prototype_template_set(prototypes: Sequence[np.ndarray], placements: Sequence[Placement] = ()) -> TemplateSet:
    """Prototypes as templates with ids equal to prototype ids"""
    support = {k: 0 for k in range(len(prototypes))}
    for placement in placements:
        support[placement.prototype_id] += 1
    return TemplateSet(
        tuple(Template(id=k, matrix=np.asarray(p, dtype=np.float64), support=max(1, support[k])) for k, p in enumerate(prototypes))
    )


def to_ground_truth(truth: SynthTruth) -> List[GroundTruthEvent]:
    """Placements as ground-truth events labeled with their prototype id"""
    templates = prototype_template_set(truth.prototypes)
    events = []
    for placement in sorted(truth.placements, key=lambda p: p.t):
        onset, offset, _, _ = detection_extent(truth.spectrogram, templates.get(placement.prototype_id), placement.t, placement.f)
        events.append(GroundTruthEvent(onset=onset, offset=offset, label=str(placement.prototype_id)))
    return events


def truth_annotation(truth: SynthTruth, recording_id: str = "") -> AnnotationSequence:
    """The generating placements written as an annotation"""
    templates = prototype_template_set(truth.prototypes, truth.placements)
    ordered = sorted(truth.placements, key=lambda p: p.t)
    detections = []
    for rank, placement in enumerate(ordered):
        template = templates.get(placement.prototype_id)
        onset, offset, low_hz, high_hz = detection_extent(truth.spectrogram, template, placement.t, placement.f)
        detections.append(
            Detection(
                template_id=placement.prototype_id,
                t=placement.t,
                f=placement.f,
                score=template.energy,
                onset_s=onset,
                offset_s=offset,
                low_hz=low_hz,
                high_hz=high_hz,
                rank=rank,
                round=0,
            )
        )
    signal_values = truth.spectrogram.above_floor()
    residual = replay_residual(signal_values, templates, detections)
    return AnnotationSequence(
        recording_id=recording_id,
        detections=detections,
        residual_norm=float(np.linalg.norm(residual)),
        signal_norm=float(np.linalg.norm(signal_values)),
    )


def prototype_patch(truth: Union[SynthTruth, SynthCorpus], k: int, detect_cfg: DetectionConfig) -> np.ndarray:
    """
    Event patch of prototype ``k`` rendered alone and noiseless

    Learned templates live in this frame, so it is the reference they are
    compared with.
    """
    cfg = truth.config.recording if isinstance(truth, SynthCorpus) else truth.config
    if cfg is None:
        raise ValueError("prototype_patch needs the generating configuration")
    proto = truth.prototypes[k]
    rows, cols = proto.shape
    n_time = max(4 * cols, 2 * detect_cfg.box_time + cols)
    canvas = np.zeros((cfg.n_freq, n_time), dtype=np.float64)
    start = (n_time - cols) // 2
    canvas[truth.base_rows[k]:truth.base_rows[k] + rows, start:start + cols] = proto
    spec = Spectrogram(values=cfg.db_floor + canvas, time_step=cfg.time_step, freq_axis=freq_axis(cfg), db_floor=cfg.db_floor)

    events = detect_events(spec, detect_cfg)
    if not events:
        raise ValueError(f"prototype {k} has no cell above eta={detect_cfg.eta}")
    return max(events, key=lambda ev: ev.n_pixels).patch


def match_templates_to_prototypes(
    ts: TemplateSet,
    truth: Union[SynthTruth, SynthCorpus],
    detect_cfg: DetectionConfig,
) -> Dict[int, Tuple[int, float]]:
    """Nearest prototype (and its distance) of every template"""
    references = [prototype_patch(truth, k, detect_cfg) for k in range(len(truth.prototypes))]
    result: Dict[int, Tuple[int, float]] = {}
    for tpl in ts:
        distances = [template_distance(tpl.matrix, ref) for ref in references]
        best = int(np.argmin(distances))
        result[tpl.id] = (best, float(distances[best]))
    return result


def score_against_truth(
    annotation: AnnotationSequence,
    truth: SynthTruth,
    iou_min: float,
    label_map: Optional[LabelMap] = None,
) -> Tuple[DetectionScores, ClassificationScores]:
    """
    Score an annotation against the generating placements

    Labels are prototype ids; ``label_map`` defaults to the identity over
    the template ids of the annotation.
    """
    gt = to_ground_truth(truth)
    label_map = label_map or LabelMap.identity(sorted({det.template_id for det in annotation.detections}))
    predicted = [label_map[det.template_id] for det in annotation.detections]
    return detection_pr(annotation, gt, iou_min), classification_metrics(annotation, predicted, gt, iou_min)


def write_corpus(corpus: SynthCorpus, root: Union[str, Path], fingerprint: str = "synthetic") -> Dict[str, Path]:
    """
    Write a corpus in the flat dataset layout

    ``audio/<individual>/<id>.npz`` spectrograms, ``annotations/<individual>/<id>.csv``
    ground truth, ``truth/<individual>/<id>.csv`` generating annotations and a
    ``prototypes`` template archive.

    Returns:
        Mapping of layout roots
    """
    root = Path(root)
    layout = {
        "audio_root": root / "audio",
        "annotation_root": root / "annotations",
        "truth_root": root / "truth",
        "prototypes": root / "prototypes",
    }
    all_placements: List[Placement] = []
    for individual, songs in sorted(corpus.recordings.items()):
        for recording_id, truth in songs:
            save_spectrogram_npz(truth.spectrogram, layout["audio_root"] / individual / f"{recording_id}.npz")
            write_ground_truth_csv(to_ground_truth(truth), layout["annotation_root"] / individual / f"{recording_id}.csv")
            write_annotation_csv(truth_annotation(truth, recording_id), layout["truth_root"] / individual / f"{recording_id}.csv")
            all_placements.extend(truth.placements)

    save_templates(prototype_template_set(corpus.prototypes, all_placements), layout["prototypes"], fingerprint)
    logger.info("Synthetic corpus written", root=str(root))
    return layout
