"""
Median templates, template distance and complete-linkage merging
"""

from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist, squareform

from ..models.cluster_types import ClusterAssignment, FitCounts, Template, TemplateSet
from ..models.config_types import HdbscanConfig
from ..utils.logging_config import get_logger
from .clustering import initial_clustering, split_clusters
from .pipeline_errors import AllNoiseError, EmptyTemplateSetError, NoEventsError, TemplateShapeError

logger = get_logger(__name__)

PatchStack = Union[np.ndarray, Sequence[np.ndarray]]


def as_patch_stack(patches: PatchStack) -> np.ndarray:
    """Stack 2-D patches into an ``(n, rows, cols)`` array"""
    stack = np.asarray(patches, dtype=np.float64) if isinstance(patches, np.ndarray) else np.stack(
        [np.asarray(p, dtype=np.float64) for p in patches]
    )
    if stack.ndim != 3:
        raise TemplateShapeError(f"Expected a stack of 2-D patches, got shape {stack.shape}")
    return stack


def archive_precision(matrix: np.ndarray) -> np.ndarray:
    """Round values through float32, the precision templates are stored at"""
    return np.asarray(matrix, dtype=np.float32).astype(np.float64)


def median_template(template_id: int, members: np.ndarray) -> Optional[Template]:
    """Element-wise median of member patches; None when the median is all zero"""
    matrix = archive_precision(np.median(members, axis=0))
    if not np.any(matrix > 0):
        return None
    return Template(id=template_id, matrix=matrix, support=int(members.shape[0]))


def build_templates(patches: PatchStack, assignment: ClusterAssignment) -> TemplateSet:
    """
    One median template per cluster

    Template ids equal cluster labels; noise events contribute to nothing and
    clusters whose median is identically zero are dropped.

    Raises:
        AllNoiseError: no non-noise cluster
    """
    stack = as_patch_stack(patches)
    if stack.shape[0] != assignment.labels.size:
        raise ValueError("patches and assignment differ in length")
    if assignment.n_clusters == 0:
        raise AllNoiseError("build_templates", f"all {stack.shape[0]} events are noise")

    templates: List[Template] = []
    for label in range(assignment.n_clusters):
        template = median_template(label, stack[assignment.members(label)])
        if template is None:
            logger.warning("Dropping zero-norm template", cluster=label)
            continue
        templates.append(template)
    return TemplateSet(tuple(templates))


def _matrix(template: Union[Template, np.ndarray]) -> np.ndarray:
    return template.matrix if isinstance(template, Template) else np.asarray(template, dtype=np.float64)


def template_distance(t1: Union[Template, np.ndarray], t2: Union[Template, np.ndarray]) -> float:
    """
    Normalized squared distance between two templates

    d(T1, T2) = ||T1 - T2||^2 / max(||T1||^2, ||T2||^2) with Frobenius norms.

    Raises:
        TemplateShapeError: shapes differ
        ValueError: a template has zero norm
    """
    m1, m2 = _matrix(t1), _matrix(t2)
    if m1.shape != m2.shape:
        raise TemplateShapeError(f"Template shapes differ: {m1.shape} vs {m2.shape}")
    e1 = float(np.sum(m1 * m1))
    e2 = float(np.sum(m2 * m2))
    if e1 == 0.0 or e2 == 0.0:
        raise ValueError("template_distance is undefined for zero-norm templates")
    diff = m1 - m2
    return float(np.sum(diff * diff)) / max(e1, e2)


def condensed_distances(ts: TemplateSet) -> np.ndarray:
    """Pairwise template distances in scipy condensed order (templates sorted by id)"""
    flat = np.stack([tpl.matrix.ravel() for tpl in ts])
    energies = np.array([tpl.energy for tpl in ts])
    if np.any(energies == 0):
        raise ValueError("template set contains a zero-norm template")
    rows, cols = np.triu_indices(len(ts), k=1)
    return pdist(flat, metric="sqeuclidean") / np.maximum(energies[rows], energies[cols])


def distance_matrix(ts: TemplateSet) -> np.ndarray:
    """Square matrix of pairwise template distances"""
    if len(ts) < 2:
        return np.zeros((len(ts), len(ts)))
    return squareform(condensed_distances(ts))


def _merge_groups(ts: TemplateSet, h: float) -> List[List[int]]:
    """Template id groups of a complete-linkage cut at height ``h``"""
    tree = linkage(condensed_distances(ts), method="complete")
    flat_labels = fcluster(tree, t=h, criterion="distance")
    groups: Dict[int, List[int]] = {}
    for template_id, label in zip(ts.ids, flat_labels):
        groups.setdefault(int(label), []).append(template_id)
    return sorted(groups.values(), key=lambda ids: ids[0])


def merge_templates(
    ts: TemplateSet,
    h: float,
    member_patches: Dict[int, np.ndarray],
) -> TemplateSet:
    """
    Merge near-duplicate templates by complete-linkage clustering

    Every group of the cut at ``h`` becomes one template: the median over the
    pooled member patches of the group, keeping the lowest id and the union of
    provenance. The cut is repeated on the recomputed templates until no pair
    lies within ``h``.

    Args:
        ts: Templates to merge
        h: Distance threshold in [0, 1]
        member_patches: Template id -> ``(n, rows, cols)`` member patches

    Returns:
        Template set whose pairwise distances all exceed ``h``
    """
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"merge threshold h must lie in [0, 1], got {h}")

    pools = {tid: as_patch_stack(member_patches[tid]) for tid in ts.ids}
    current = ts
    while len(current) > 1:
        groups = _merge_groups(current, h)
        if len(groups) == len(current):
            break

        templates: List[Template] = []
        provenance: Dict[int, Tuple[int, ...]] = {}
        next_pools: Dict[int, np.ndarray] = {}
        for ids in groups:
            keep_id = ids[0]
            if len(ids) == 1:
                templates.append(current.get(keep_id))
                provenance[keep_id] = current.provenance[keep_id]
                next_pools[keep_id] = pools[keep_id]
                continue
            pooled = np.concatenate([pools[tid] for tid in ids])
            merged = median_template(keep_id, pooled)
            if merged is None:
                logger.warning("Dropping zero-norm merged template", ids=ids)
                continue
            templates.append(merged)
            provenance[keep_id] = tuple(sorted(set().union(*(current.provenance[tid] for tid in ids))))
            next_pools[keep_id] = pooled
            logger.debug("Merged templates", ids=ids, into=keep_id, support=merged.support)

        current = TemplateSet(tuple(templates), provenance)
        pools = next_pools

    logger.info("Templates merged", before=len(ts), after=len(current), h=h)
    return current


def fit_template_set(
    patches: PatchStack,
    cluster_cfg: HdbscanConfig,
    split_cfg: HdbscanConfig,
    merge_h: float,
) -> Tuple[TemplateSet, FitCounts]:
    """
    Learn templates from event patches

    Runs initial clustering, split, median templates and merging.

    Raises:
        NoEventsError: no patches
        AllNoiseError: clustering labels every event as noise
        EmptyTemplateSetError: no template survives
    """
    stack = as_patch_stack(patches) if len(patches) else np.zeros((0, 0, 0))
    n_events = stack.shape[0]
    if n_events == 0:
        raise NoEventsError("detect", "no syllable events detected in the support set")
    if n_events < 2:
        raise AllNoiseError("initial_clustering", "a single event cannot be clustered")

    flat = stack.reshape(n_events, -1)
    _, initial = initial_clustering(flat, cluster_cfg)
    if initial.n_clusters == 0:
        raise AllNoiseError("initial_clustering", f"all {n_events} events are noise")

    assignment = split_clusters(flat, initial, split_cfg)
    unmerged = build_templates(stack, assignment)
    if len(unmerged) == 0:
        raise EmptyTemplateSetError("build_templates", "every cluster median is zero")

    members = {tid: stack[assignment.members(tid)] for tid in unmerged.ids}
    merged = merge_templates(unmerged, merge_h, members)
    if len(merged) == 0:
        raise EmptyTemplateSetError("merge_templates", "every merged template is zero")

    counts = FitCounts(
        n_events=n_events,
        n_initial_clusters=initial.n_clusters,
        n_split_clusters=assignment.n_clusters,
        n_templates_before_merge=len(unmerged),
        n_templates=len(merged),
    )
    return merged, counts
