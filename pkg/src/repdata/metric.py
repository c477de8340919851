"""Euclidean distances, Hausdorff distance and the optimal representation error."""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import LabeledDataset
from .errors import DataError, MissingClassError, NotASubsetError

__all__ = [
    "as_points",
    "pairwise_distances",
    "distance_matrix",
    "directed_hausdorff",
    "hausdorff",
    "check_subset",
    "optimal_epsilon_subset",
    "dual_norm",
]

# rows per block when a full cross-distance matrix would be too large
_CHUNK = 2048


def as_points(points) -> np.ndarray:
    if isinstance(points, LabeledDataset):
        return points.points
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DataError(f"expected a list of points, got array of shape {arr.shape}")
    return arr


def pairwise_distances(X, Y) -> np.ndarray:
    """Euclidean distances between the rows of ``X`` and ``Y``.

    Every module gets its distances from here so that threshold tests
    (``d <= eps``) and certified radii agree bit for bit.
    """
    X, Y = as_points(X), as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise DataError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    return cdist(X, Y, "euclidean")


def distance_matrix(points) -> np.ndarray:
    """Symmetric ``m x m`` matrix of Euclidean distances with a zero diagonal."""
    X = as_points(points)
    if X.shape[0] == 0:
        raise DataError("distance_matrix needs at least one point")
    D = pairwise_distances(X, X)
    np.fill_diagonal(D, 0.0)
    return D


def _nearest_distances(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], _CHUNK):
        out[start:start + _CHUNK] = pairwise_distances(X[start:start + _CHUNK], Y).min(axis=1)
    return out


def directed_hausdorff(X, Y) -> float:
    """``max_{x in X} min_{y in Y} |x - y|``."""
    X, Y = as_points(X), as_points(Y)
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise DataError("Hausdorff distance needs two nonempty point sets")
    if X.shape[1] != Y.shape[1]:
        raise DataError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    return float(_nearest_distances(X, Y).max())


def hausdorff(X, Y) -> float:
    return max(directed_hausdorff(X, Y), directed_hausdorff(Y, X))


def check_subset(original: LabeledDataset, reduced: LabeledDataset) -> np.ndarray:
    """Return, for each row of ``reduced``, the index of an identical labeled row of ``original``."""
    if original.dim != reduced.dim:
        raise DataError(f"dimension mismatch: {original.dim} vs {reduced.dim}")
    lookup: dict[tuple, int] = {}
    for i, (p, c) in enumerate(zip(original.points, original.labels)):
        lookup.setdefault((int(c), p.tobytes()), i)
    out = np.empty(len(reduced), dtype=np.int64)
    for i, (p, c) in enumerate(zip(reduced.points, reduced.labels)):
        j = lookup.get((int(c), p.tobytes()))
        if j is None:
            raise NotASubsetError(f"reduced row {i} (label {int(c)}) does not occur in the original dataset")
        out[i] = j
    return out


def optimal_epsilon_subset(original: LabeledDataset, reduced: LabeledDataset) -> float:
    """Smallest radius within which every original point has a same-class representative.

    Only subsets are considered (the identity is the isometry), so the result
    is the largest per-class directed Hausdorff distance from the original
    points to the reduced ones.
    """
    check_subset(original, reduced)
    worst = 0.0
    for c in np.unique(original.labels):
        X = original.points[original.labels == c]
        Y = reduced.points[reduced.labels == c]
        if Y.shape[0] == 0:
            raise MissingClassError(f"class {int(c)} has no representative in the reduced dataset")
        worst = max(worst, directed_hausdorff(X, Y))
    return worst


def dual_norm(w, include_bias: bool = False) -> float:
    """Euclidean norm of the weights; the bias ``w[0]`` is skipped by default."""
    w = np.asarray(w, dtype=np.float64)
    return float(np.linalg.norm(w if include_bias else w[1:]))
