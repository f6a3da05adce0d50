"""
Syllable event detection

Events are the 8-connected components of the cells lying at least ``eta``
dB above the spectrogram floor. Each event is rendered as a fixed-size
patch centered on its energy centroid, holding the event's own cells in dB
above floor and zero everywhere else.
"""

from typing import List, Tuple

import numpy as np
from scipy import ndimage

from ..models.config_types import DetectionConfig
from ..models.signal_types import Spectrogram, SyllableEvent
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

EIGHT_CONNECTIVITY = np.ones((3, 3), dtype=bool)


def super_threshold_mask(spec: Spectrogram, cfg: DetectionConfig) -> np.ndarray:
    """Cells at least ``eta`` dB above the floor"""
    return (spec.values - spec.db_floor) >= cfg.eta


def label_components(mask: np.ndarray) -> Tuple[np.ndarray, int]:
    """8-connected component labeling of a boolean mask"""
    labels, count = ndimage.label(mask, structure=EIGHT_CONNECTIVITY)
    return labels, int(count)


def patch_shape(spec: Spectrogram, cfg: DetectionConfig) -> Tuple[int, int]:
    """(rows, cols) of the patches extracted from ``spec``"""
    return (spec.n_freq if cfg.full_band else cfg.box_freq, cfg.box_time)


def _round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def patch_origin(spec: Spectrogram, centroid: Tuple[float, float], cfg: DetectionConfig) -> Tuple[int, int]:
    """(time_col, freq_row) of patch cell [0, 0] for an event centroid"""
    center_t = _round_half_up(centroid[0])
    origin_t = center_t - cfg.box_time // 2
    if cfg.full_band:
        return origin_t, 0
    center_f = _round_half_up(centroid[1])
    return origin_t, center_f - cfg.box_freq // 2


def render_patch(
    energy: np.ndarray,
    pixels: np.ndarray,
    origin: Tuple[int, int],
    shape: Tuple[int, int],
) -> np.ndarray:
    """Copy the event cells of ``energy`` into a zero patch anchored at ``origin``"""
    rows, cols = pixels[:, 0], pixels[:, 1]
    patch_rows = rows - origin[1]
    patch_cols = cols - origin[0]
    inside = (
        (patch_rows >= 0) & (patch_rows < shape[0]) & (patch_cols >= 0) & (patch_cols < shape[1])
    )
    patch = np.zeros(shape, dtype=np.float64)
    patch[patch_rows[inside], patch_cols[inside]] = energy[rows[inside], cols[inside]]
    return patch


def extract_patch(spec: Spectrogram, ev: SyllableEvent, cfg: DetectionConfig) -> np.ndarray:
    """
    Fixed-size patch of one event

    The window is centered on the rounded energy centroid (time only in
    full-band mode); cells outside the event are zero and events larger
    than the box are cropped symmetrically about the centroid.
    """
    origin = patch_origin(spec, ev.centroid, cfg)
    return render_patch(spec.above_floor(), ev.pixels, origin, patch_shape(spec, cfg))


def detect_events(spec: Spectrogram, cfg: DetectionConfig) -> List[SyllableEvent]:
    """
    Extract syllable events as connected super-threshold components

    Args:
        spec: Spectrogram
        cfg: Detection configuration

    Returns:
        Events ordered by (t_start, f_low); components below ``cfg.min_pixels`` cells are dropped
    """
    energy = spec.above_floor()
    labels, count = label_components(super_threshold_mask(spec, cfg))
    shape = patch_shape(spec, cfg)

    events: List[SyllableEvent] = []
    dropped = 0
    for index, region in enumerate(ndimage.find_objects(labels), start=1):
        if region is None:
            continue
        local_rows, local_cols = np.nonzero(labels[region] == index)
        if local_rows.size < cfg.min_pixels:
            dropped += 1
            continue
        rows = local_rows + region[0].start
        cols = local_cols + region[1].start
        pixels = np.column_stack([rows, cols])

        weights = energy[rows, cols]
        total = float(weights.sum())
        centroid = (float(np.dot(cols, weights) / total), float(np.dot(rows, weights) / total))
        origin = patch_origin(spec, centroid, cfg)

        events.append(
            SyllableEvent(
                pixels=pixels,
                t_start=int(cols.min()),
                t_end=int(cols.max()),
                f_low=int(rows.min()),
                f_high=int(rows.max()),
                centroid=centroid,
                patch=render_patch(energy, pixels, origin, shape),
                patch_origin=origin,
            )
        )

    events.sort(key=lambda ev: (ev.t_start, ev.f_low))
    logger.debug("Events detected", components=count, kept=len(events), dropped=dropped)
    return events


def stack_patches(events: List[SyllableEvent]) -> np.ndarray:
    """Flattened patches as an ``(n_events, dim)`` matrix"""
    if not events:
        return np.zeros((0, 0))
    return np.stack([ev.patch.ravel() for ev in events])
