"""Proximity graphs, greedy dominating sets and per-class dataset reduction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sps

from .dataset import LabeledDataset
from .errors import ContractError, DataError
from .metric import as_points, check_subset, distance_matrix, optimal_epsilon_subset, pairwise_distances

__all__ = [
    "ProximityGraph",
    "ReductionReport",
    "LambdaAudit",
    "build_proximity_graph",
    "greedy_dominating_set",
    "is_dominating_set",
    "reduce_dataset",
    "lambda_balance_audit",
    "nearest_representative_pairing",
    "random_stratified_subset",
    "epsilon_for_target_size",
]


@dataclass(frozen=True)
class ProximityGraph:
    """Undirected graph joining points at distance ``<= epsilon``.

    ``adjacency`` is a symmetric boolean CSR matrix without self-loops.
    """

    num_vertices: int
    epsilon: float
    adjacency: sps.csr_matrix

    @property
    def edges(self) -> set[tuple[int, int]]:
        upper = sps.triu(self.adjacency, k=1).tocoo()
        return {(int(i), int(j)) for i, j in zip(upper.row, upper.col)}

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    def neighbors(self, v: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[v]:a.indptr[v + 1]]

    @classmethod
    def from_edges(cls, num_vertices: int, edges, epsilon: float = math.nan) -> "ProximityGraph":
        """Graph with an explicit edge list (used for hand-built test graphs)."""
        pairs = np.array([(i, j) for i, j in edges if i != j], dtype=np.int64).reshape(-1, 2)
        rows = np.concatenate((pairs[:, 0], pairs[:, 1]))
        cols = np.concatenate((pairs[:, 1], pairs[:, 0]))
        adj = sps.csr_matrix((np.ones(rows.size, dtype=bool), (rows, cols)), shape=(num_vertices, num_vertices))
        adj.sum_duplicates()
        adj.data[:] = True
        return cls(num_vertices, epsilon, adj)


def _graph_from_distances(D: np.ndarray, epsilon: float) -> ProximityGraph:
    mask = D <= epsilon
    np.fill_diagonal(mask, False)
    return ProximityGraph(D.shape[0], float(epsilon), sps.csr_matrix(mask))


def build_proximity_graph(points, epsilon: float) -> ProximityGraph:
    """The epsilon-proximity graph of ``points`` (closed balls: ``d <= epsilon``)."""
    if not (epsilon >= 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be finite and >= 0, got {epsilon}")
    X = as_points(points)
    if X.shape[0] == 0:
        raise DataError("proximity graph needs at least one point")
    return _graph_from_distances(distance_matrix(X), epsilon)


def greedy_dominating_set(graph: ProximityGraph) -> list[int]:
    """Greedy dominating set, returned sorted.

    Repeatedly picks the vertex whose closed neighbourhood contains the most
    still-uncovered vertices; ties go to the lowest index.
    """
    m = graph.num_vertices
    if m == 0:
        return []
    closed = (graph.adjacency + sps.identity(m, dtype=bool, format="csr")).tocsr()
    closed.sum_duplicates()
    indptr, indices = closed.indptr, closed.indices
    gains = np.diff(indptr).astype(np.int64)
    uncovered = np.ones(m, dtype=bool)
    chosen = []
    while True:
        v = int(np.argmax(gains))
        if gains[v] == 0:
            break
        chosen.append(v)
        nbhd = indices[indptr[v]:indptr[v + 1]]
        newly = nbhd[uncovered[nbhd]]
        uncovered[newly] = False
        # each newly covered vertex stops counting for every vertex of its closed neighbourhood
        touched = np.concatenate([indices[indptr[u]:indptr[u + 1]] for u in newly])
        gains -= np.bincount(touched, minlength=m)
    return sorted(chosen)


def is_dominating_set(graph: ProximityGraph, vertices) -> bool:
    covered = np.zeros(graph.num_vertices, dtype=bool)
    for v in vertices:
        covered[v] = True
        covered[graph.neighbors(v)] = True
    return bool(covered.all())


@dataclass(frozen=True)
class LambdaAudit:
    """Coverage count of each representative and the common value, if any."""

    histogram: dict[int, int]
    lam: Optional[int]


@dataclass(frozen=True)
class ReductionReport:
    reduced: LabeledDataset
    indices: np.ndarray
    requested_epsilon: float
    certified_epsilon: float
    per_class_sizes: list[int]
    lambda_histogram: dict[int, int]
    lam: Optional[int]
    original_size: int = 0

    def to_dict(self) -> dict:
        return {
            "requested_epsilon": self.requested_epsilon,
            "certified_epsilon": self.certified_epsilon,
            "original_size": self.original_size,
            "reduced_size": len(self.reduced),
            "per_class_sizes": list(self.per_class_sizes),
            "lambda": self.lam,
            "lambda_histogram": {str(k): v for k, v in self.lambda_histogram.items()},
        }


def reduce_dataset(dataset: LabeledDataset, epsilon: float) -> ReductionReport:
    """Keep a greedy dominating set of each class's epsilon-proximity graph.

    The reduced dataset lists class 0's representatives first (in original
    order), then class 1's, and so on.
    """
    if not (epsilon >= 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be finite and >= 0, got {epsilon}")
    if len(dataset) == 0:
        raise DataError("cannot reduce an empty dataset")
    kept = []
    sizes = []
    for c in range(dataset.num_classes):
        idx = dataset.class_indices(c)
        if idx.size == 0:
            raise DataError(f"class {c} has no points")
        graph = build_proximity_graph(dataset.points[idx], epsilon)
        chosen = idx[greedy_dominating_set(graph)]
        kept.append(chosen)
        sizes.append(int(chosen.size))
    indices = np.concatenate(kept)
    reduced = dataset.subset(indices)
    audit = lambda_balance_audit(dataset, reduced, epsilon)
    return ReductionReport(
        reduced=reduced,
        indices=indices,
        requested_epsilon=float(epsilon),
        certified_epsilon=optimal_epsilon_subset(dataset, reduced),
        per_class_sizes=sizes,
        lambda_histogram=audit.histogram,
        lam=audit.lam,
        original_size=len(dataset),
    )


def nearest_representative_pairing(original: LabeledDataset, reduced: LabeledDataset) -> np.ndarray:
    """Index into ``reduced`` of each original point's nearest same-class representative.

    Ties go to the lowest reduced index.
    """
    if original.dim != reduced.dim:
        raise DataError(f"dimension mismatch: {original.dim} vs {reduced.dim}")
    pairing = np.empty(len(original), dtype=np.int64)
    for c in np.unique(original.labels):
        rows = np.flatnonzero(original.labels == c)
        reps = np.flatnonzero(reduced.labels == c)
        if reps.size == 0:
            raise ContractError(f"class {int(c)} has no representative")
        D = pairwise_distances(original.points[rows], reduced.points[reps])
        pairing[rows] = reps[np.argmin(D, axis=1)]
    return pairing


def lambda_balance_audit(
    original: LabeledDataset, reduced: LabeledDataset, epsilon: float, partition: bool = False
) -> LambdaAudit:
    """Count the original points each representative covers within ``epsilon``.

    By default a point is counted for every same-class representative within
    ``epsilon``. With ``partition=True`` it is only counted for its nearest one.
    """
    check_subset(original, reduced)
    counts = np.zeros(len(reduced), dtype=np.int64)
    if partition:
        pairing = nearest_representative_pairing(original, reduced)
        d = np.linalg.norm(original.points - reduced.points[pairing], axis=1)
        np.add.at(counts, pairing[d <= epsilon], 1)
    else:
        for c in np.unique(reduced.labels):
            reps = np.flatnonzero(reduced.labels == c)
            D = pairwise_distances(reduced.points[reps], original.points[original.labels == c])
            counts[reps] = (D <= epsilon).sum(axis=1)
    histogram = {i: int(n) for i, n in enumerate(counts)}
    lam = int(counts[0]) if counts.size and np.all(counts == counts[0]) else None
    return LambdaAudit(histogram, lam)


def random_stratified_subset(dataset: LabeledDataset, per_class_sizes, seed: int) -> tuple[LabeledDataset, np.ndarray]:
    """Uniform random subset with the given number of points in each class."""
    rng = np.random.default_rng(seed)
    picked = []
    for c, size in enumerate(per_class_sizes):
        idx = dataset.class_indices(c)
        if size > idx.size:
            raise ValueError(f"class {c} has {idx.size} points, cannot draw {size}")
        picked.append(np.sort(rng.choice(idx, size=size, replace=False)))
    indices = np.concatenate(picked)
    return dataset.subset(indices), indices


def _reduced_size(class_distances: list[np.ndarray], epsilon: float) -> int:
    return sum(len(greedy_dominating_set(_graph_from_distances(D, epsilon))) for D in class_distances)


def epsilon_for_target_size(
    dataset: LabeledDataset, target: int, iterations: int = 60
) -> tuple[float, int]:
    """Bisect epsilon so that the reduction has about ``target`` points.

    Greedy sizes are not strictly monotone in epsilon, so the epsilon whose
    size is closest to ``target`` among all evaluated ones is returned along
    with that size.
    """
    class_distances = [distance_matrix(dataset.class_points(c)) for c in range(dataset.num_classes)]
    lo = 0.0
    hi = max(float(D.max()) for D in class_distances)
    best = (abs(_reduced_size(class_distances, hi) - target), hi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        size = _reduced_size(class_distances, mid)
        best = min(best, (abs(size - target), mid))
        if size == target:
            break
        if size > target:
            lo = mid
        else:
            hi = mid
    eps = best[1]
    return eps, _reduced_size(class_distances, eps)
