"""
Annotation, ground-truth and spectrogram files

Annotations are written both as CSV with a header line and as JSON lines
whose first record carries the sequence metadata. Floats are written with
their shortest round-tripping representation, so reading a file back
yields the same values.
"""

import csv
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import orjson
from pydantic import ValidationError

from ..models.annotation_types import AnnotationSequence, Detection, GroundTruthEvent
from ..models.signal_types import Spectrogram
from ..services.pipeline_errors import DatasetLayoutError, MissingGroundTruthError

PathLike = Union[str, Path]

ANNOTATION_COLUMNS = [
    "recording_id",
    "onset_s",
    "offset_s",
    "low_hz",
    "high_hz",
    "template_id",
    "score",
    "t",
    "f",
    "rank",
    "round",
]
GROUND_TRUTH_COLUMNS = ["onset_s", "offset_s", "label"]
SPECTROGRAM_KEYS = ("values", "time_step", "freq_axis", "scale", "db_floor")


def _detection_row(recording_id: str, det: Detection) -> List[str]:
    return [
        recording_id,
        repr(det.onset_s),
        repr(det.offset_s),
        repr(det.low_hz),
        repr(det.high_hz),
        str(det.template_id),
        repr(det.score),
        str(det.t),
        str(det.f),
        str(det.rank),
        str(det.round),
    ]


def write_annotation_csv(seq: AnnotationSequence, path: PathLike) -> Path:
    """Write detections as CSV (header only for an empty sequence)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(ANNOTATION_COLUMNS)
        for det in seq.detections:
            writer.writerow(_detection_row(seq.recording_id, det))
    return path


def read_annotation_csv(path: PathLike, recording_id: Optional[str] = None) -> AnnotationSequence:
    """Read detections written by ``write_annotation_csv``"""
    path = Path(path)
    detections = []
    found_id = recording_id
    with open(path, "r", encoding="utf-8", newline="") as file:
        reader = csv.DictReader(file)
        if reader.fieldnames != ANNOTATION_COLUMNS:
            raise DatasetLayoutError(path, f"unexpected annotation header {reader.fieldnames}")
        for row in reader:
            found_id = found_id or row["recording_id"]
            detections.append(
                Detection(
                    template_id=int(row["template_id"]),
                    t=int(row["t"]),
                    f=int(row["f"]),
                    score=float(row["score"]),
                    onset_s=float(row["onset_s"]),
                    offset_s=float(row["offset_s"]),
                    low_hz=float(row["low_hz"]),
                    high_hz=float(row["high_hz"]),
                    rank=int(row["rank"]),
                    round=int(row["round"]),
                )
            )
    return AnnotationSequence(recording_id=found_id or path.stem, detections=detections)


def write_annotation_jsonl(seq: AnnotationSequence, path: PathLike) -> Path:
    """Write a metadata record followed by one record per detection"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta: Dict[str, Any] = {
        "type": "meta",
        "recording_id": seq.recording_id,
        "fingerprint": seq.fingerprint,
        "residual_norm": seq.residual_norm,
        "signal_norm": seq.signal_norm,
    }
    lines = [orjson.dumps(meta, option=orjson.OPT_SORT_KEYS)]
    for det in seq.detections:
        record = {"type": "detection", "recording_id": seq.recording_id, **det.model_dump()}
        lines.append(orjson.dumps(record, option=orjson.OPT_SORT_KEYS))
    path.write_bytes(b"\n".join(lines) + b"\n")
    return path


def read_annotation_jsonl(path: PathLike) -> AnnotationSequence:
    """Read a sequence written by ``write_annotation_jsonl``"""
    path = Path(path)
    meta: Optional[Dict[str, Any]] = None
    detections = []
    for line in path.read_bytes().splitlines():
        if not line.strip():
            continue
        record = orjson.loads(line)
        kind = record.pop("type", None)
        if kind == "meta":
            meta = record
        elif kind == "detection":
            record.pop("recording_id", None)
            detections.append(Detection.model_validate(record))
        else:
            raise DatasetLayoutError(path, f"unknown record type {kind!r}")
    if meta is None:
        raise DatasetLayoutError(path, "missing metadata record")
    return AnnotationSequence(
        recording_id=meta["recording_id"],
        detections=detections,
        residual_norm=meta.get("residual_norm") or 0.0,
        signal_norm=meta.get("signal_norm"),
        fingerprint=meta.get("fingerprint"),
    )


def write_ground_truth_csv(events: Sequence[GroundTruthEvent], path: PathLike) -> Path:
    """Write ground-truth syllables as ``onset_s,offset_s,label``"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(GROUND_TRUTH_COLUMNS)
        for event in events:
            writer.writerow([repr(event.onset), repr(event.offset), event.label])
    return path


def read_ground_truth_csv(path: PathLike) -> List[GroundTruthEvent]:
    """
    Read ground-truth syllables

    Columns ``onset_s``, ``offset_s`` and ``label`` are required; others are ignored.

    Raises:
        MissingGroundTruthError: file does not exist
        DatasetLayoutError: columns missing or a row is invalid
    """
    path = Path(path)
    if not path.is_file():
        raise MissingGroundTruthError(path, "ground-truth file not found")
    events = []
    with open(path, "r", encoding="utf-8", newline="") as file:
        reader = csv.DictReader(file)
        missing = set(GROUND_TRUTH_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise DatasetLayoutError(path, f"missing columns {sorted(missing)}")
        for line_number, row in enumerate(reader, start=2):
            try:
                events.append(
                    GroundTruthEvent(onset=float(row["onset_s"]), offset=float(row["offset_s"]), label=row["label"])
                )
            except (ValueError, ValidationError) as error:
                raise DatasetLayoutError(path, f"line {line_number}: {error}") from error
    return events


def save_spectrogram_npz(spec: Spectrogram, path: PathLike) -> Path:
    """Store a spectrogram as an uncompressed ``.npz`` archive"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as file:
        np.savez(
            file,
            values=spec.values,
            time_step=np.float64(spec.time_step),
            freq_axis=spec.freq_axis,
            scale=np.str_(spec.scale),
            db_floor=np.float64(spec.db_floor),
        )
    return path


def load_spectrogram_npz(path: PathLike) -> Spectrogram:
    """Load a spectrogram stored by ``save_spectrogram_npz``"""
    path = Path(path)
    with np.load(path, allow_pickle=False) as data:
        missing = [key for key in SPECTROGRAM_KEYS if key not in data.files]
        if missing:
            raise DatasetLayoutError(path, f"spectrogram archive lacks {missing}")
        return Spectrogram(
            values=np.array(data["values"], dtype=np.float64),
            time_step=float(data["time_step"]),
            freq_axis=np.array(data["freq_axis"], dtype=np.float64),
            db_floor=float(data["db_floor"]),
            scale=str(data["scale"]),
        )
