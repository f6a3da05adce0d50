"""
Patch clustering - PCA embedding, HDBSCAN, initial clustering and split

The initial clustering runs HDBSCAN on the first 3 principal components of
all patches; the split stage re-embeds every cluster with its own 2-component
PCA and re-clusters it, so conflated syllable shapes come apart.
"""

from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.cluster import HDBSCAN
from sklearn.decomposition import PCA

from ..models.cluster_types import NOISE_LABEL, ClusterAssignment, PcaModel
from ..models.config_types import HdbscanConfig
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

INITIAL_COMPONENTS = 3
SPLIT_COMPONENTS = 2
# explained variance at or below this is treated as an empty direction
VARIANCE_TOLERANCE = 1e-20

PatchesLike = Union[np.ndarray, Sequence[np.ndarray]]


def as_patch_matrix(patches: PatchesLike) -> np.ndarray:
    """Flatten a patch list into an ``(n, dim)`` float matrix"""
    if isinstance(patches, np.ndarray) and patches.ndim == 2:
        return np.asarray(patches, dtype=np.float64)
    return np.stack([np.asarray(p, dtype=np.float64).ravel() for p in patches]) if len(patches) else np.zeros((0, 0))


def fit_pca(patches: PatchesLike, n_components: int) -> PcaModel:
    """
    Fit an exact PCA on flattened patches

    Components come from the full singular value decomposition of the
    centered data; each component is signed so that its entry of largest
    magnitude is positive.

    Raises:
        ValueError: fewer than 2 patches, or too many components requested
    """
    data = as_patch_matrix(patches)
    n_patches = data.shape[0]
    if n_patches < 2:
        raise ValueError(f"PCA needs at least 2 patches, got {n_patches}")
    if n_components < 1 or n_components > min(data.shape[1], n_patches):
        raise ValueError(
            f"n_components={n_components} exceeds min(dim={data.shape[1]}, n_patches={n_patches})"
        )

    pca = PCA(n_components=n_components, svd_solver="full")
    pca.fit(data)

    components = np.array(pca.components_, dtype=np.float64)
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), pivots])
    signs[signs == 0] = 1.0
    components *= signs[:, None]

    return PcaModel(
        mean=np.array(pca.mean_, dtype=np.float64),
        components=components,
        explained_variance=np.array(pca.explained_variance_, dtype=np.float64),
    )


def project(model: PcaModel, patch: np.ndarray) -> np.ndarray:
    """
    Coordinates of one patch (or a stack of patches) in the PCA basis

    Directions with zero explained variance yield zero coordinates.

    Raises:
        ValueError: dimension mismatch
    """
    data = np.asarray(patch, dtype=np.float64)
    # a stack is (n, dim) or (n, rows, cols); anything else is one patch
    stacked = (data.ndim == 2 and data.shape[1] == model.dim and data.size != model.dim) or data.ndim == 3
    single = not stacked
    flat = data.reshape(1, -1) if single else data.reshape(data.shape[0], -1)
    if flat.shape[1] != model.dim:
        raise ValueError(f"Patch dimension {flat.shape[1]} does not match PCA dimension {model.dim}")

    coords = (flat - model.mean) @ model.components.T
    coords[:, model.explained_variance <= VARIANCE_TOLERANCE] = 0.0
    return coords[0] if single else coords


def _relabel_by_first_member(labels: np.ndarray) -> np.ndarray:
    """Renumber clusters 0..k-1 in order of their first member"""
    relabeled = np.full(labels.shape, NOISE_LABEL, dtype=np.int64)
    mapping: Dict[int, int] = {}
    for index, label in enumerate(labels):
        if label == NOISE_LABEL:
            continue
        if label not in mapping:
            mapping[label] = len(mapping)
        relabeled[index] = mapping[label]
    return relabeled


def hdbscan(points: np.ndarray, cfg: HdbscanConfig) -> ClusterAssignment:
    """
    Cluster coordinate vectors with HDBSCAN

    Clusters larger than ``max_cluster_size`` are not selectable, so their
    children are preferred. Labels are numbered by first member so the
    partition does not depend on the library's internal numbering.

    Raises:
        ValueError: empty input
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    n_points = points.shape[0]
    if n_points == 0:
        raise ValueError("hdbscan needs at least one point")

    min_samples = cfg.effective_min_samples
    if n_points < max(cfg.min_cluster_size, min_samples):
        return ClusterAssignment.noise(n_points)

    if np.all(np.ptp(points, axis=0) == 0):
        # zero spread: one density level, the whole set is one cluster
        return ClusterAssignment(np.zeros(n_points, dtype=np.int64))

    model = HDBSCAN(
        min_cluster_size=cfg.min_cluster_size,
        min_samples=min_samples,
        max_cluster_size=cfg.max_cluster_size,
        cluster_selection_method=cfg.cluster_selection_method,
        allow_single_cluster=cfg.allow_single_cluster,
        copy=True,
    )
    labels = model.fit_predict(points)
    return ClusterAssignment(_relabel_by_first_member(labels))


def initial_clustering(
    patches: PatchesLike,
    cfg: Optional[HdbscanConfig] = None,
) -> Tuple[PcaModel, ClusterAssignment]:
    """PCA with 3 components over all patches followed by HDBSCAN on the coordinates"""
    cfg = cfg or HdbscanConfig()
    data = as_patch_matrix(patches)
    n_components = min(INITIAL_COMPONENTS, data.shape[1], data.shape[0])
    model = fit_pca(data, n_components)
    assignment = hdbscan(project(model, data), cfg)
    logger.info(
        "Initial clustering done",
        patches=data.shape[0],
        clusters=assignment.n_clusters,
        noise=int(np.sum(assignment.labels == NOISE_LABEL)),
    )
    return model, assignment


def _split_one(data: np.ndarray, cfg: HdbscanConfig) -> Optional[np.ndarray]:
    """Sub-labels of one cluster, or None when it does not split"""
    if data.shape[0] < 2 * cfg.min_cluster_size:
        return None
    n_components = min(SPLIT_COMPONENTS, data.shape[1], data.shape[0])
    model = fit_pca(data, n_components)
    coords = project(model, data)
    sub = hdbscan(coords, cfg)
    if sub.n_clusters <= 1:
        return None

    labels = sub.labels.copy()
    noise = labels == NOISE_LABEL
    if np.any(noise):
        centroids = np.stack([coords[labels == k].mean(axis=0) for k in range(sub.n_clusters)])
        distances = np.linalg.norm(coords[noise][:, None, :] - centroids[None, :, :], axis=2)
        labels[noise] = np.argmin(distances, axis=1)
    return labels


def split_clusters(
    patches: PatchesLike,
    assignment: ClusterAssignment,
    cfg: Optional[HdbscanConfig] = None,
) -> ClusterAssignment:
    """
    Split every cluster with its own 2-component PCA and HDBSCAN

    Points the per-cluster HDBSCAN rejects join the nearest sub-cluster of
    their parent, so splitting never creates new noise. Clusters that do not
    split pass through; labels are renumbered globally in parent order.
    """
    cfg = cfg or HdbscanConfig()
    data = as_patch_matrix(patches)
    if data.shape[0] != assignment.labels.size:
        raise ValueError("patches and assignment differ in length")

    result = np.full(assignment.labels.shape, NOISE_LABEL, dtype=np.int64)
    next_label = 0
    n_split = 0
    for parent in range(assignment.n_clusters):
        members = assignment.members(parent)
        sub_labels = _split_one(data[members], cfg)
        if sub_labels is None:
            result[members] = next_label
            next_label += 1
            continue
        n_split += 1
        result[members] = sub_labels + next_label
        next_label += int(sub_labels.max()) + 1

    logger.info("Split clusters", parents=assignment.n_clusters, clusters=next_label, split=n_split)
    return ClusterAssignment(result)


def group_patches(patches: PatchesLike, assignment: ClusterAssignment) -> Dict[int, np.ndarray]:
    """Member patches of every non-noise cluster, keyed by label"""
    data = as_patch_matrix(patches)
    return {label: data[assignment.members(label)] for label in range(assignment.n_clusters)}


def cluster_sizes(assignment: ClusterAssignment) -> List[int]:
    """Member count per cluster label"""
    return [int(np.sum(assignment.labels == label)) for label in range(assignment.n_clusters)]
