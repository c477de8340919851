"""Vietoris-Rips persistence in dimensions 0 and 1, bottleneck distance and
the representation-error interval it yields.

An edge enters the filtration at the distance between its endpoints and a
triangle at its longest edge (no halving).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sps
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import DataError
from .metric import as_points, distance_matrix, hausdorff

__all__ = [
    "Simplex",
    "PersistenceDiagram",
    "EpsilonInterval",
    "vietoris_rips",
    "persistence_diagram",
    "persistence_diagrams",
    "bottleneck_distance",
    "epsilon_interval",
    "read_diagram_csv",
    "write_diagram_csv",
]


@dataclass(frozen=True, order=True)
class Simplex:
    filtration_value: float
    vertices: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def sort_key(self):
        return (self.filtration_value, self.dim, self.vertices)


def _resolve_scale(D: np.ndarray, max_scale) -> float:
    if max_scale is None or max_scale == "auto":
        return float(D.max()) if D.size else 0.0
    max_scale = float(max_scale)
    if not max_scale > 0:
        raise ValueError("max_scale must be positive or 'auto'")
    return max_scale


def vietoris_rips(points, max_dim: int = 1, max_scale="auto") -> list[Simplex]:
    """All simplices up to dimension ``max_dim + 1`` with value ``<= max_scale``.

    Sorted by (value, dimension, vertices).
    """
    if max_dim not in (0, 1):
        raise ValueError("max_dim must be 0 or 1")
    D = distance_matrix(points)
    scale = _resolve_scale(D, max_scale)
    m = D.shape[0]
    simplices = [Simplex(0.0, (i,)) for i in range(m)]
    for i, j in combinations(range(m), 2):
        if D[i, j] <= scale:
            simplices.append(Simplex(float(D[i, j]), (i, j)))
    if max_dim == 1:
        for i, j, k in combinations(range(m), 3):
            value = max(D[i, j], D[i, k], D[j, k])
            if value <= scale:
                simplices.append(Simplex(float(value), (i, j, k)))
    simplices.sort(key=Simplex.sort_key)
    return simplices


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Multiset of (birth, death) pairs in one homological dimension; death may be ``inf``."""

    dim: int
    pairs: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        pairs = np.array(self.pairs, dtype=np.float64).reshape(-1, 2)
        if np.any(pairs[:, 1] < pairs[:, 0]):
            raise DataError("persistence pairs need death >= birth")
        if np.any(~np.isfinite(pairs[:, 0])):
            raise DataError("births must be finite")
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        pairs = pairs[order]
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return self.pairs.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.pairs, other.pairs)

    __hash__ = None

    @property
    def finite(self) -> np.ndarray:
        return self.pairs[np.isfinite(self.pairs[:, 1])]

    @property
    def essential(self) -> np.ndarray:
        return self.pairs[~np.isfinite(self.pairs[:, 1]), 0]

    def truncated(self, value: float) -> "PersistenceDiagram":
        """Copy with infinite deaths replaced by ``value``."""
        pairs = self.pairs.copy()
        pairs[~np.isfinite(pairs[:, 1]), 1] = value
        return PersistenceDiagram(self.dim, pairs)


# ------------------------------------------------------------------ diagrams


def _sorted_edges(D: np.ndarray, scale: float):
    iu, ju = np.triu_indices(D.shape[0], k=1)
    values = D[iu, ju]
    keep = values <= scale
    iu, ju, values = iu[keep], ju[keep], values[keep]
    # (value, i, j) order; triu_indices is already lexicographic so a stable sort suffices
    order = np.argsort(values, kind="stable")
    return iu[order], ju[order], values[order]


def _union_find_pass(m: int, iu: np.ndarray, ju: np.ndarray, stop_early: bool) -> np.ndarray:
    """Flag the edges that merge two components (the zero-dimensional deaths)."""
    parent = list(range(m))

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    negative = np.zeros(iu.size, dtype=bool)
    components = m
    for e, (i, j) in enumerate(zip(iu.tolist(), ju.tolist())):
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        # elder rule with equal births: the root with the smaller index survives
        if ri < rj:
            parent[rj] = ri
        else:
            parent[ri] = rj
        negative[e] = True
        components -= 1
        if stop_early and components == 1:
            break
    return negative


def _dim1(D: np.ndarray, scale: float, edges, negative: np.ndarray) -> list[tuple[float, float]]:
    iu, ju, values = edges
    m = D.shape[0]
    n_edges = values.size
    if m < 3 or n_edges == 0:
        return []
    edge_id = np.full((m, m), -1, dtype=np.int64)
    edge_id[iu, ju] = np.arange(n_edges)
    edge_id[ju, iu] = np.arange(n_edges)

    tri = np.array(list(combinations(range(m), 3)), dtype=np.int64)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    tvals = np.maximum(np.maximum(D[a, b], D[a, c]), D[b, c])
    keep = tvals <= scale
    tri, tvals = tri[keep], tvals[keep]
    order = np.lexsort((tri[:, 2], tri[:, 1], tri[:, 0], tvals))
    tri, tvals = tri[order], tvals[order]
    faces = np.stack(
        (edge_id[tri[:, 0], tri[:, 1]], edge_id[tri[:, 0], tri[:, 2]], edge_id[tri[:, 1], tri[:, 2]]), axis=1
    )

    # columns over Z/2 stored as Python int bitmasks indexed by edge position
    pivot_of: dict[int, int] = {}
    pairs = []
    for t in range(tri.shape[0]):
        f0, f1, f2 = faces[t].tolist()
        col = (1 << f0) ^ (1 << f1) ^ (1 << f2)
        while col:
            low = col.bit_length() - 1
            other = pivot_of.get(low)
            if other is None:
                pivot_of[low] = col
                birth, death = float(values[low]), float(tvals[t])
                if death > birth:
                    pairs.append((birth, death))
                break
            col ^= other
    for e in np.flatnonzero(~negative).tolist():
        if e not in pivot_of:
            pairs.append((float(values[e]), math.inf))
    return pairs


def persistence_diagrams(points, dims: Sequence[int] = (0, 1), max_scale="auto") -> dict[int, PersistenceDiagram]:
    """Diagrams of the Rips filtration of ``points`` for each requested dimension.

    Dimension 0 keeps one pair per point (zero-length pairs from coincident
    points included); dimension 1 drops pairs with death == birth.
    """
    if not set(dims) <= {0, 1}:
        raise ValueError("only dimensions 0 and 1 are supported")
    X = as_points(points)
    if X.shape[0] == 0:
        raise DataError("persistence needs at least one point")
    D = distance_matrix(X)
    scale = _resolve_scale(D, max_scale)
    m = X.shape[0]
    edges = _sorted_edges(D, scale)
    out = {}
    if 0 in dims:
        negative = _union_find_pass(m, edges[0], edges[1], stop_early=True)
        deaths = edges[2][negative]
        pairs = [(0.0, float(d)) for d in deaths] + [(0.0, math.inf)] * (m - deaths.size)
        out[0] = PersistenceDiagram(0, pairs)
    if 1 in dims:
        negative = _union_find_pass(m, edges[0], edges[1], stop_early=False)
        out[1] = PersistenceDiagram(1, _dim1(D, scale, edges, negative))
    return out


def persistence_diagram(points, dim: int, max_scale="auto") -> PersistenceDiagram:
    return persistence_diagrams(points, (dim,), max_scale)[dim]


# ---------------------------------------------------------------- bottleneck


def _linf(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(A[:, None, 0] - B[None, :, 0]), np.abs(A[:, None, 1] - B[None, :, 1]))


def _finite_bottleneck(A: np.ndarray, B: np.ndarray) -> float:
    na, nb = A.shape[0], B.shape[0]
    if na == 0 and nb == 0:
        return 0.0
    cost = _linf(A, B)
    diag_a = 0.5 * (A[:, 1] - A[:, 0])
    diag_b = 0.5 * (B[:, 1] - B[:, 0])
    candidates = np.unique(np.concatenate(([0.0], cost.ravel(), diag_a, diag_b)))

    # left: A then one diagonal slot per B point; right: B then one diagonal slot per A point
    ra, rb = np.arange(na), np.arange(nb)
    diag_rows = np.repeat(na + rb, na)
    diag_cols = np.tile(nb + ra, nb)
    size = na + nb

    def feasible(t: float) -> bool:
        ai, bj = np.nonzero(cost <= t)
        sa = ra[diag_a <= t]
        sb = rb[diag_b <= t]
        rows = np.concatenate((ai, sa, na + sb, diag_rows))
        cols = np.concatenate((bj, nb + sa, sb, diag_cols))
        graph = sps.csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(size, size))
        match = maximum_bipartite_matching(graph, perm_type="column")
        return bool(np.all(match >= 0))

    lo, hi = 0, candidates.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def bottleneck_distance(A: PersistenceDiagram, B: PersistenceDiagram) -> float:
    """Exact bottleneck distance between two diagrams of the same dimension.

    Finite points may be matched to the diagonal at cost (death - birth) / 2.
    Essential points are matched among themselves by birth; if the two
    diagrams have different numbers of them the distance is ``math.inf``.
    """
    if A.dim != B.dim:
        raise ValueError(f"diagrams have different dimensions ({A.dim} vs {B.dim})")
    ea, eb = np.sort(A.essential), np.sort(B.essential)
    if ea.size != eb.size:
        return math.inf
    # on a line the sorted matching minimises the largest displacement
    essential = float(np.max(np.abs(ea - eb))) if ea.size else 0.0
    return max(essential, _finite_bottleneck(A.finite, B.finite))


# ----------------------------------------------------------- epsilon interval


@dataclass(frozen=True)
class EpsilonInterval:
    """Lower and upper bounds on the optimal representation error."""

    lower: float
    upper: float
    bottleneck: dict[int, float]
    hausdorff: float

    @classmethod
    def from_distances(cls, bottleneck: dict[int, float], hausdorff_distance: float) -> "EpsilonInterval":
        lower = 0.5 * max(bottleneck.values()) if bottleneck else 0.0
        return cls(lower, float(hausdorff_distance), dict(bottleneck), float(hausdorff_distance))

    @property
    def consistent(self) -> bool:
        return self.lower <= self.upper

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "bottleneck": {str(q): v for q, v in self.bottleneck.items()},
            "hausdorff": self.hausdorff,
            "consistent": self.consistent,
        }


def epsilon_interval(X, X_tilde, dims: Iterable[int] = (0, 1), max_scale="auto") -> EpsilonInterval:
    """Half the largest bottleneck distance over ``dims`` below, the Hausdorff distance above."""
    dims = tuple(dims)
    X, Y = as_points(X), as_points(X_tilde)
    if X.shape[1] != Y.shape[1]:
        raise DataError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    dx = persistence_diagrams(X, dims, max_scale)
    dy = persistence_diagrams(Y, dims, max_scale)
    bottleneck = {q: bottleneck_distance(dx[q], dy[q]) for q in dims}
    return EpsilonInterval.from_distances(bottleneck, hausdorff(X, Y))


# ----------------------------------------------------------------------- I/O


def write_diagram_csv(diagrams: Union[PersistenceDiagram, Iterable[PersistenceDiagram]], path) -> None:
    if isinstance(diagrams, PersistenceDiagram):
        diagrams = [diagrams]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["dim", "birth", "death"])
        for dgm in diagrams:
            for birth, death in dgm.pairs:
                writer.writerow([dgm.dim, format(birth, ".17g"), "inf" if math.isinf(death) else format(death, ".17g")])


def read_diagram_csv(path, dim: Optional[int] = None) -> dict[int, PersistenceDiagram]:
    """Diagrams keyed by dimension; restricted to ``dim`` when given."""
    pairs: dict[int, list] = {}
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["dim", "birth", "death"]:
                raise DataError(f"{path}: expected header dim,birth,death")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 3:
                    raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
                try:
                    q, birth, death = int(row[0]), float(row[1]), float(row[2])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: unparseable row {row!r}") from None
                pairs.setdefault(q, []).append((birth, death))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if dim is not None:
        return {dim: PersistenceDiagram(dim, pairs.get(dim, []))}
    return {q: PersistenceDiagram(q, p) for q, p in pairs.items()}
