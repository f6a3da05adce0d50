"""
Template archive storage

An archive is a directory holding ``manifest.yaml`` plus one blob of
row-major little-endian float32 values per template.
"""

from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import yaml

from ..models.cluster_types import FitCounts, Template, TemplateSet
from ..services.pipeline_errors import (
    DatasetLayoutError,
    FingerprintMismatchError,
    InvariantViolationError,
)
from ..utils.logging_config import get_logger
from .types import ARCHIVE_FORMAT_VERSION, ArchiveManifest, StageCounts, TemplateEntry

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.yaml"
BLOB_DTYPE = np.dtype("<f4")


class TemplateArchive:
    """
    Template archive bound to one directory

    Round-trips templates bit-exactly: matrices are held at float32
    precision in memory already.
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    @property
    def manifest_path(self) -> Path:
        return self.directory / MANIFEST_NAME

    def exists(self) -> bool:
        return self.manifest_path.is_file()

    def save(self, ts: TemplateSet, fingerprint: str, counts: Optional[FitCounts] = None) -> Path:
        """
        Write templates and manifest

        Returns:
            Path of the manifest
        """
        self.directory.mkdir(parents=True, exist_ok=True)
        for stale in self.directory.glob("*.f32"):
            stale.unlink()

        entries = []
        for tpl in ts:
            file_name = f"{tpl.id}.f32"
            blob = np.ascontiguousarray(tpl.matrix, dtype=BLOB_DTYPE).tobytes(order="C")
            (self.directory / file_name).write_bytes(blob)
            entries.append(
                TemplateEntry(
                    id=tpl.id,
                    support=tpl.support,
                    duration=tpl.duration,
                    file=file_name,
                    provenance=list(ts.provenance[tpl.id]),
                )
            )

        manifest = ArchiveManifest(
            format_version=ARCHIVE_FORMAT_VERSION,
            fingerprint=fingerprint,
            shape=ts.shape if len(ts) else (0, 0),
            counts=None if counts is None else StageCounts(
                n_events=counts.n_events,
                initial_clusters=counts.n_initial_clusters,
                split_clusters=counts.n_split_clusters,
                before_merge=counts.n_templates_before_merge,
                after_merge=counts.n_templates,
            ),
            templates=entries,
        )
        with open(self.manifest_path, "w", encoding="utf-8") as file:
            yaml.safe_dump(manifest.model_dump(mode="json"), file, sort_keys=False, default_flow_style=None)

        logger.info("Template archive written", path=str(self.directory), templates=len(ts), fingerprint=fingerprint)
        return self.manifest_path

    def read_manifest(self) -> ArchiveManifest:
        """Parse and validate the manifest"""
        if not self.exists():
            raise DatasetLayoutError(self.directory, f"no {MANIFEST_NAME} in template archive")
        with open(self.manifest_path, "r", encoding="utf-8") as file:
            data = yaml.safe_load(file)
        manifest = ArchiveManifest.model_validate(data)
        if manifest.format_version != ARCHIVE_FORMAT_VERSION:
            raise InvariantViolationError(
                "archive_integrity", f"{self.manifest_path}: unsupported format version {manifest.format_version}"
            )
        return manifest

    def load(self, expected_fingerprint: Optional[str] = None) -> Tuple[TemplateSet, ArchiveManifest]:
        """
        Read templates back

        Args:
            expected_fingerprint: Refuse archives produced with other settings

        Raises:
            FingerprintMismatchError: fingerprint differs from ``expected_fingerprint``
            InvariantViolationError: blob size disagrees with the manifest shape
        """
        manifest = self.read_manifest()
        if expected_fingerprint is not None and manifest.fingerprint != expected_fingerprint:
            raise FingerprintMismatchError(expected_fingerprint, manifest.fingerprint, self.manifest_path)

        rows, cols = manifest.shape
        templates = []
        for entry in manifest.templates:
            blob = (self.directory / entry.file).read_bytes()
            if len(blob) != rows * cols * BLOB_DTYPE.itemsize:
                raise InvariantViolationError(
                    "archive_integrity", f"{entry.file} holds {len(blob)} bytes, expected {rows * cols * BLOB_DTYPE.itemsize}"
                )
            matrix = np.frombuffer(blob, dtype=BLOB_DTYPE).reshape(rows, cols).astype(np.float64)
            templates.append(Template(id=entry.id, matrix=matrix, support=entry.support))

        provenance = {entry.id: tuple(entry.provenance) for entry in manifest.templates}
        logger.debug("Template archive loaded", path=str(self.directory), templates=len(templates))
        return TemplateSet(tuple(templates), provenance), manifest


def save_templates(
    ts: TemplateSet,
    directory: Union[str, Path],
    fingerprint: str,
    counts: Optional[FitCounts] = None,
) -> Path:
    """Write ``ts`` as an archive in ``directory``"""
    return TemplateArchive(directory).save(ts, fingerprint, counts)


def load_templates(
    directory: Union[str, Path],
    expected_fingerprint: Optional[str] = None,
) -> Tuple[TemplateSet, ArchiveManifest]:
    """Read the archive in ``directory``"""
    return TemplateArchive(directory).load(expected_fingerprint)
