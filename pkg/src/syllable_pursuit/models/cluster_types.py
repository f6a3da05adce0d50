"""
Clustering and template type definitions
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

NOISE_LABEL = -1


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Fitted principal component basis"""
    mean: np.ndarray
    components: np.ndarray  # (n_components, dim), orthonormal rows
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """Per-event cluster labels, -1 meaning noise"""
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        present = np.unique(labels[labels != NOISE_LABEL])
        if present.size and (present[0] < 0 or not np.array_equal(present, np.arange(present.size))):
            raise ValueError("Cluster labels must be -1 or contiguous integers starting at 0")

    @property
    def n_clusters(self) -> int:
        non_noise = self.labels[self.labels != NOISE_LABEL]
        return int(non_noise.max()) + 1 if non_noise.size else 0

    def members(self, label: int) -> np.ndarray:
        """Indices of the events carrying ``label``"""
        return np.flatnonzero(self.labels == label)

    @classmethod
    def noise(cls, n: int) -> "ClusterAssignment":
        """All-noise assignment of ``n`` events"""
        return cls(np.full(n, NOISE_LABEL, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class Template:
    """Median patch of a cluster"""
    id: int
    matrix: np.ndarray
    support: int

    def __post_init__(self):
        if self.support < 1:
            raise ValueError("Template support must be at least 1")
        if np.any(self.matrix < 0):
            raise ValueError("Template entries must be non-negative")

    @property
    def shape(self) -> Tuple[int, int]:
        return (int(self.matrix.shape[0]), int(self.matrix.shape[1]))

    @property
    def energy(self) -> float:
        """Squared Frobenius norm"""
        return float(np.sum(np.square(self.matrix, dtype=np.float64)))

    @property
    def active_columns(self) -> np.ndarray:
        """Indices of time columns with positive energy"""
        return np.flatnonzero(self.matrix.sum(axis=0) > 0)

    @property
    def active_rows(self) -> np.ndarray:
        """Indices of frequency rows with positive energy"""
        return np.flatnonzero(self.matrix.sum(axis=1) > 0)

    @property
    def duration(self) -> int:
        """Count of time columns whose column energy exceeds 0"""
        return int(self.active_columns.size)


@dataclass(frozen=True, eq=False)
class TemplateSet:
    """Templates sharing one patch shape, ordered by id"""
    templates: Tuple[Template, ...]
    provenance: Dict[int, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        ordered = tuple(sorted(self.templates, key=lambda tpl: tpl.id))
        object.__setattr__(self, "templates", ordered)
        ids = [tpl.id for tpl in ordered]
        if len(set(ids)) != len(ids):
            raise ValueError("Template ids must be unique")
        shapes = {tpl.shape for tpl in ordered}
        if len(shapes) > 1:
            raise ValueError(f"Templates must share one shape, got {sorted(shapes)}")
        provenance = {tpl.id: tuple(self.provenance.get(tpl.id, (tpl.id,))) for tpl in ordered}
        object.__setattr__(self, "provenance", provenance)

    def __len__(self) -> int:
        return len(self.templates)

    def __iter__(self) -> Iterator[Template]:
        return iter(self.templates)

    @property
    def ids(self) -> List[int]:
        return [tpl.id for tpl in self.templates]

    @property
    def shape(self) -> Tuple[int, int]:
        if not self.templates:
            raise ValueError("Empty template set has no shape")
        return self.templates[0].shape

    def get(self, template_id: int) -> Template:
        for tpl in self.templates:
            if tpl.id == template_id:
                return tpl
        raise KeyError(template_id)

    def index_of(self, template_id: int) -> int:
        return self.ids.index(template_id)

    def median_duration(self) -> float:
        return float(np.median([tpl.duration for tpl in self.templates])) if self.templates else 0.0

    def without(self, template_ids: Sequence[int]) -> "TemplateSet":
        """Copy without the given templates"""
        dropped = set(template_ids)
        kept = tuple(tpl for tpl in self.templates if tpl.id not in dropped)
        return TemplateSet(kept, {tpl.id: self.provenance[tpl.id] for tpl in kept})


@dataclass(frozen=True)
class FitCounts:
    """Event and template counts recorded while fitting one unit"""
    n_events: int
    n_initial_clusters: int
    n_split_clusters: int
    n_templates_before_merge: int
    n_templates: int
