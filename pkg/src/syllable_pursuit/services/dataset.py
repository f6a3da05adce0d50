"""
Dataset discovery and support/query splits

Recordings live under ``audio_root/<individual>/`` as ``.wav`` files or
``.npz`` spectrogram archives. Ground truth follows one of two layouts:

- ``flat``: ``annotation_root/<individual>/<stem>.csv``
- ``bengalese_finch``: ``<name>.wav.csv`` next to the audio file
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import soundfile as sf

from ..models.annotation_types import GroundTruthEvent
from ..models.config_types import PathsConfig, StftConfig
from ..models.signal_types import Spectrogram
from ..storage.annotation_io import load_spectrogram_npz, read_ground_truth_csv
from ..utils.logging_config import get_logger
from .pipeline_errors import AudioDecodeError, DatasetLayoutError, MissingGroundTruthError
from .signal_frontend import compute_spectrogram, load_audio

logger = get_logger(__name__)

RECORDING_SUFFIXES = (".wav", ".npz")
# accepted band around the support target
SUPPORT_LOW = 0.95
SUPPORT_HIGH = 1.05


@dataclass(frozen=True)
class RecordingRef:
    """One recording of the dataset"""
    recording_id: str
    individual: str
    audio_path: Path
    annotation_path: Optional[Path]
    duration_s: float


@dataclass(frozen=True)
class SupportQuerySplit:
    """Per-individual support and query recordings"""
    seed: int
    support_minutes: float
    support: Dict[str, List[RecordingRef]] = field(default_factory=dict)
    query: Dict[str, List[RecordingRef]] = field(default_factory=dict)

    def support_refs(self) -> List[RecordingRef]:
        return sorted((ref for refs in self.support.values() for ref in refs), key=lambda r: r.recording_id)

    def query_refs(self) -> List[RecordingRef]:
        return sorted((ref for refs in self.query.values() for ref in refs), key=lambda r: r.recording_id)

    @property
    def individuals(self) -> List[str]:
        return sorted(set(self.support) | set(self.query))


def annotation_path_for(audio_path: Path, individual: str, paths: PathsConfig) -> Path:
    """Ground-truth file of a recording under the configured layout"""
    if paths.layout == "bengalese_finch":
        return audio_path.with_name(audio_path.name + ".csv")
    return Path(paths.annotation_root) / individual / f"{audio_path.stem}.csv"


def recording_duration(path: Path) -> float:
    """Duration in seconds without decoding the samples"""
    if path.suffix.lower() == ".npz":
        with np.load(path, allow_pickle=False) as data:
            return float(data["values"].shape[1] * float(data["time_step"]))
    try:
        info = sf.info(str(path))
    except RuntimeError as error:
        raise AudioDecodeError(path, f"cannot read audio header ({error})") from error
    return float(info.frames / info.samplerate) if info.samplerate else 0.0


def discover_recordings(paths: PathsConfig) -> List[RecordingRef]:
    """
    List the recordings of the dataset sorted by recording id

    The individual is the first directory level under ``audio_root``;
    recording ids are ``<individual>/<stem>``.

    Raises:
        DatasetLayoutError: audio root missing or without recordings
    """
    audio_root = Path(paths.audio_root)
    if not audio_root.is_dir():
        raise DatasetLayoutError(audio_root, "audio root does not exist")

    refs = []
    for individual_dir in sorted(p for p in audio_root.iterdir() if p.is_dir()):
        for audio_path in sorted(individual_dir.rglob("*")):
            if audio_path.suffix.lower() not in RECORDING_SUFFIXES or not audio_path.is_file():
                continue
            annotation = annotation_path_for(audio_path, individual_dir.name, paths)
            refs.append(
                RecordingRef(
                    recording_id=f"{individual_dir.name}/{audio_path.stem}",
                    individual=individual_dir.name,
                    audio_path=audio_path,
                    annotation_path=annotation if annotation.is_file() else None,
                    duration_s=recording_duration(audio_path),
                )
            )

    if not refs:
        raise DatasetLayoutError(audio_root, "no .wav or .npz recordings found")
    refs.sort(key=lambda ref: ref.recording_id)
    logger.info("Recordings discovered", root=str(audio_root), recordings=len(refs), individuals=len({r.individual for r in refs}))
    return refs


def _pick_support(refs: Sequence[RecordingRef], target_s: float, rng: np.random.Generator) -> List[RecordingRef]:
    order = rng.permutation(len(refs))
    chosen: List[RecordingRef] = []
    total = 0.0
    for index in order:
        if total >= SUPPORT_LOW * target_s:
            break
        ref = refs[index]
        if total + ref.duration_s <= SUPPORT_HIGH * target_s:
            chosen.append(ref)
            total += ref.duration_s
    return chosen


def make_split(recordings: Sequence[RecordingRef], support_minutes: float, seed: int) -> SupportQuerySplit:
    """
    Seeded per-individual support/query split

    Files are taken in a seeded random order while the support total stays
    within 105 % of the target, until 95 % of it is reached. The remaining
    files of the individual form its query set.
    """
    target_s = support_minutes * 60.0
    by_individual: Dict[str, List[RecordingRef]] = {}
    for ref in sorted(recordings, key=lambda r: r.recording_id):
        by_individual.setdefault(ref.individual, []).append(ref)

    support: Dict[str, List[RecordingRef]] = {}
    query: Dict[str, List[RecordingRef]] = {}
    for offset, (individual, refs) in enumerate(sorted(by_individual.items())):
        rng = np.random.default_rng([seed, offset])
        chosen = _pick_support(refs, target_s, rng)
        total = sum(ref.duration_s for ref in chosen)
        if not SUPPORT_LOW * target_s <= total <= SUPPORT_HIGH * target_s:
            logger.warning(
                "Support duration outside the target band",
                individual=individual,
                support_s=round(total, 3),
                target_s=target_s,
            )
        chosen_ids = {ref.recording_id for ref in chosen}
        support[individual] = sorted(chosen, key=lambda r: r.recording_id)
        query[individual] = [ref for ref in refs if ref.recording_id not in chosen_ids]

    return SupportQuerySplit(seed=seed, support_minutes=support_minutes, support=support, query=query)


def load_spectrogram(ref: RecordingRef, stft: StftConfig) -> Spectrogram:
    """Spectrogram of a recording (decoded from WAV or read from ``.npz``)"""
    if ref.audio_path.suffix.lower() == ".npz":
        return load_spectrogram_npz(ref.audio_path)
    return compute_spectrogram(load_audio(ref.audio_path), stft)


def load_ground_truth(ref_or_path) -> List[GroundTruthEvent]:
    """
    Ground-truth events of a recording

    Raises:
        MissingGroundTruthError: the recording has no ground-truth file
    """
    if isinstance(ref_or_path, RecordingRef):
        if ref_or_path.annotation_path is None:
            raise MissingGroundTruthError(ref_or_path.audio_path, "no ground-truth file for recording")
        return read_ground_truth_csv(ref_or_path.annotation_path)
    return read_ground_truth_csv(ref_or_path)
