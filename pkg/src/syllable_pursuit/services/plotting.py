"""
Spectrogram overlays of annotations

The spectrogram is embedded as a raster inside a vector document; every
detection becomes a rectangle in data coordinates (seconds, Hz), colored by
template id.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Patch, Rectangle

from ..models.annotation_types import AnnotationSequence, Detection
from ..models.signal_types import Spectrogram
from ..utils.logging_config import get_logger
from .pipeline_errors import AnnotationRangeError

logger = get_logger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "syllable-pursuit"
COLORMAP = "tab20"
# slack when checking detection extents against the axes
RANGE_TOLERANCE = 1e-9


def time_edges(spec: Spectrogram) -> np.ndarray:
    """Column boundaries in seconds"""
    return np.arange(spec.n_time + 1) * spec.time_step


def freq_edges(spec: Spectrogram) -> np.ndarray:
    """Row boundaries in Hz (midpoints between centers, mirrored at both ends)"""
    centers = spec.freq_axis
    if centers.size == 1:
        return np.array([centers[0] - 0.5, centers[0] + 0.5])
    inner = 0.5 * (centers[:-1] + centers[1:])
    first = centers[0] - (inner[0] - centers[0])
    last = centers[-1] + (centers[-1] - inner[-1])
    return np.concatenate([[first], inner, [last]])


def detection_box(det: Detection, spec: Spectrogram) -> Tuple[float, float, float, float]:
    """
    Rectangle (x, y, width, height) of a detection in seconds and Hz

    The box spans the detection's onset to offset and the frequency rows of
    its lowest to highest active template row.

    Raises:
        AnnotationRangeError: the detection lies outside the spectrogram
    """
    duration = spec.duration
    if det.onset_s < -RANGE_TOLERANCE or det.offset_s > duration + RANGE_TOLERANCE:
        raise AnnotationRangeError(
            f"detection {det.rank} spans {det.onset_s}-{det.offset_s} s outside 0-{duration} s"
        )
    axis = spec.freq_axis
    if det.low_hz < axis[0] - RANGE_TOLERANCE or det.high_hz > axis[-1] + RANGE_TOLERANCE:
        raise AnnotationRangeError(
            f"detection {det.rank} spans {det.low_hz}-{det.high_hz} Hz outside {axis[0]}-{axis[-1]} Hz"
        )

    edges = freq_edges(spec)
    low_row = int(np.argmin(np.abs(axis - det.low_hz)))
    high_row = int(np.argmin(np.abs(axis - det.high_hz)))
    y = float(edges[low_row])
    return det.onset_s, y, det.offset_s - det.onset_s, float(edges[high_row + 1]) - y


def template_colors(template_ids: Sequence[int]) -> Dict[int, Tuple[float, float, float, float]]:
    """Distinct color per template id, by rank of the id"""
    cmap = matplotlib.colormaps[COLORMAP]
    return {tid: tuple(cmap(index % cmap.N)) for index, tid in enumerate(sorted(set(template_ids)))}


def render_overlay(
    spec: Spectrogram,
    annotation: AnnotationSequence,
    title: Optional[str] = None,
) -> Figure:
    """Figure with the spectrogram raster and one rectangle per detection"""
    boxes = [detection_box(det, spec) for det in annotation.detections]
    colors = template_colors([det.template_id for det in annotation.detections])

    figure = Figure(figsize=(12, 4))
    axes = figure.add_subplot(1, 1, 1)
    mesh = axes.pcolormesh(time_edges(spec), freq_edges(spec), spec.values, cmap="gray_r", shading="flat", rasterized=True)
    figure.colorbar(mesh, ax=axes, label="dB")

    for index, (det, (x, y, width, height)) in enumerate(zip(annotation.detections, boxes)):
        rectangle = Rectangle(
            (x, y), width, height,
            fill=False,
            edgecolor=colors[det.template_id],
            linewidth=1.2,
        )
        rectangle.set_gid(f"detection-{index}")
        axes.add_patch(rectangle)

    if colors:
        handles: List[Patch] = [Patch(edgecolor=color, facecolor="none", label=f"template {tid}") for tid, color in colors.items()]
        axes.legend(handles=handles, loc="upper right", fontsize=7, ncol=max(1, len(handles) // 8))

    axes.set_xlabel("Time (s)")
    axes.set_ylabel("Frequency (Hz)")
    axes.set_title(title or annotation.recording_id or "annotation")
    return figure


def cmd_plot(
    spec: Spectrogram,
    annotation: AnnotationSequence,
    path: Union[str, Path],
    title: Optional[str] = None,
) -> Path:
    """
    Write the annotation overlay as a vector document

    The format follows the file suffix (SVG when absent).
    """
    path = Path(path)
    if not path.suffix:
        path = path.with_suffix(".svg")
    path.parent.mkdir(parents=True, exist_ok=True)
    figure = render_overlay(spec, annotation, title)
    metadata = {"Date": None} if path.suffix.lower() == ".svg" else None
    figure.savefig(path, dpi=100, metadata=metadata)
    logger.info("Overlay written", path=str(path), detections=len(annotation))
    return path
