"""Labeled point clouds: the core container, CSV I/O and synthetic samplers."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "LabeledDataset",
    "SamplerConfig",
    "validate_dataset",
    "load_csv",
    "save_csv",
    "sample_interlaced_torus",
    "sample_labeled_circle",
    "load_iris_binary",
]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """An ordered, immutable collection of labeled points.

    ``points`` has shape ``(m, n)`` and ``labels`` holds dense class ids in
    ``0..num_classes-1``. ``label_map`` records the original label value of
    each dense id when the dataset came from a file whose labels were remapped.
    """

    points: np.ndarray
    labels: np.ndarray
    num_classes: int
    label_map: Optional[dict[int, int]] = None
    feature_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64, copy=True)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        object.__setattr__(self, "points", _frozen(points))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "num_classes", int(self.num_classes))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))
        validate_dataset(self)

    @classmethod
    def from_arrays(cls, points, labels, num_classes: Optional[int] = None, **kwargs) -> "LabeledDataset":
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if num_classes is None:
            num_classes = int(labels.max()) + 1 if labels.size else 0
        return cls(points, labels, num_classes, **kwargs)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None

    def class_indices(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def class_points(self, c: int) -> np.ndarray:
        return self.points[self.labels == c]

    def class_counts(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.num_classes).tolist()

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        """Rows ``indices`` in the given order, keeping class count and label map."""
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            self.points[idx],
            self.labels[idx],
            self.num_classes,
            label_map=self.label_map,
            feature_names=self.feature_names,
        )

    def original_labels(self) -> np.ndarray:
        if not self.label_map:
            return self.labels.copy()
        inverse = {dense: orig for orig, dense in self.label_map.items()}
        return np.array([inverse[int(c)] for c in self.labels], dtype=np.int64)


def validate_dataset(dataset: LabeledDataset, require_all_classes: bool = False) -> None:
    """Raise :class:`DataError` if ``dataset`` breaks a container invariant."""
    points, labels = dataset.points, dataset.labels
    if points.ndim != 2:
        raise DataError(f"points must be a 2-D array, got shape {points.shape}")
    if points.shape[0] != labels.shape[0]:
        raise DataError(f"{points.shape[0]} points but {labels.shape[0]} labels")
    if points.shape[0] > 0 and points.shape[1] == 0:
        raise DataError("points must have at least one coordinate")
    if not np.all(np.isfinite(points)):
        bad = np.argwhere(~np.isfinite(points))[0]
        raise DataError(f"non-finite coordinate at row {bad[0]}, column {bad[1]}")
    if dataset.num_classes < 0:
        raise DataError("num_classes must be nonnegative")
    if labels.size and (labels.min() < 0 or labels.max() >= dataset.num_classes):
        raise DataError(f"labels must lie in [0, {dataset.num_classes - 1}]")
    if require_all_classes:
        counts = np.bincount(labels, minlength=dataset.num_classes)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise DataError(f"class {int(empty[0])} has no points")


# --------------------------------------------------------------------------- CSV


def load_csv(path, label_column: str = "label") -> LabeledDataset:
    """Read a labeled dataset; every non-label column is a feature.

    Labels must be nonnegative integers. They are remapped densely to
    ``0..k`` in increasing order of the original values, and the mapping is
    kept in ``label_map``.
    """
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc

    if not rows:
        raise DataError(f"{path}: empty file")
    header = [name.strip() for name in rows[0]]
    if label_column not in header:
        raise DataError(f"{path}: no column named {label_column!r} in header")
    label_pos = header.index(label_column)
    feature_pos = [j for j in range(len(header)) if j != label_pos]
    if not feature_pos:
        raise DataError(f"{path}: no feature columns")

    body = [(lineno, row) for lineno, row in enumerate(rows[1:], start=2) if row]
    if not body:
        raise DataError(f"{path}: no data rows")

    points = np.empty((len(body), len(feature_pos)))
    raw_labels = np.empty(len(body), dtype=np.int64)
    for r, (lineno, row) in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        cell = row[label_pos].strip()
        try:
            label = int(cell)
        except ValueError:
            raise DataError(f"{path}:{lineno}: column {label_column!r}: label {cell!r} is not an integer") from None
        if label < 0:
            raise DataError(f"{path}:{lineno}: column {label_column!r}: negative label {label}")
        raw_labels[r] = label
        for c, j in enumerate(feature_pos):
            cell = row[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"{path}:{lineno}: column {header[j]!r}: {cell!r} is not a number") from None
            if not math.isfinite(value):
                raise DataError(f"{path}:{lineno}: column {header[j]!r}: non-finite value {cell!r}")
            points[r, c] = value

    distinct = np.unique(raw_labels)
    label_map = {int(v): i for i, v in enumerate(distinct)}
    labels = np.searchsorted(distinct, raw_labels)
    return LabeledDataset(
        points,
        labels,
        len(distinct),
        label_map=label_map,
        feature_names=tuple(header[j] for j in feature_pos),
    )


def save_csv(dataset: LabeledDataset, path, label_column: str = "label") -> None:
    """Write ``dataset`` with 17 significant digits per coordinate.

    Original label values are written when a label map is present, so that
    ``load_csv`` rebuilds the same dense labels as long as every class occurs.
    """
    names = dataset.feature_names or tuple(f"x{j}" for j in range(dataset.dim))
    if os.path.isdir(path):
        raise DataError(f"cannot write {path}: is a directory")
    labels = dataset.original_labels()
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow([*names, label_column])
            for row, label in zip(dataset.points, labels):
                writer.writerow([format(v, ".17g") for v in row] + [int(label)])
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------------- samplers


@dataclass(frozen=True)
class SamplerConfig:
    """Parameters of the synthetic datasets.

    Torus: two solid tori with major radius ``major_radius`` and tube radius
    ``minor_radius``; the second torus lies in the xz-plane and its centre is
    shifted by ``separation`` along x (defaults to the major radius, so each
    core circle passes through the centre of the other's disk).
    Circle: ``num_points`` points (default ``2 * points_per_class``) on a circle.
    """

    shape: str = "interlaced-torus"
    points_per_class: int = 2000
    noise: float = 0.0
    seed: int = 0
    major_radius: float = 3.0
    minor_radius: float = 1.0
    separation: Optional[float] = None
    radius: float = 30.0
    num_points: Optional[int] = None

    def __post_init__(self):
        if self.shape not in ("interlaced-torus", "circle"):
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.points_per_class < 1:
            raise ValueError("points_per_class must be >= 1")
        if not self.noise >= 0:
            raise ValueError("noise must be nonnegative")
        if self.shape == "interlaced-torus":
            if not 0 < self.minor_radius < self.major_radius:
                raise ValueError("torus needs 0 < minor_radius < major_radius")
            if not 0 < self.torus_separation < 2 * self.major_radius:
                raise ValueError("separation must lie in (0, 2 * major_radius) for the tori to interlace")
        elif not self.radius > 0:
            raise ValueError("circle radius must be positive")
        if self.num_points is not None and self.num_points < 1:
            raise ValueError("num_points must be >= 1")

    @property
    def torus_separation(self) -> float:
        return self.major_radius if self.separation is None else self.separation


def _solid_torus(rng: np.random.Generator, count: int, R: float, r: float) -> np.ndarray:
    # (major angle, minor angle, tube radius) with the tube radius area-corrected;
    # rejection on the (R + rho cos phi) volume factor makes the law uniform.
    out = np.empty((0, 3))
    while out.shape[0] < count:
        k = 2 * (count - out.shape[0]) + 16
        theta = rng.uniform(0.0, 2 * np.pi, k)
        phi = rng.uniform(0.0, 2 * np.pi, k)
        rho = r * np.sqrt(rng.uniform(0.0, 1.0, k))
        keep = rng.uniform(0.0, R + r, k) <= R + rho * np.cos(phi)
        theta, phi, rho = theta[keep], phi[keep], rho[keep]
        ring = R + rho * np.cos(phi)
        pts = np.column_stack((ring * np.cos(theta), ring * np.sin(theta), rho * np.sin(phi)))
        out = np.vstack((out, pts))
    return out[:count]


def sample_interlaced_torus(config: SamplerConfig) -> LabeledDataset:
    """Two linked solid tori, one class each; deterministic given ``config.seed``."""
    if config.shape != "interlaced-torus":
        raise ValueError("config.shape must be 'interlaced-torus'")
    rng = np.random.default_rng(config.seed)
    R, r, m = config.major_radius, config.minor_radius, config.points_per_class
    first = _solid_torus(rng, m, R, r)
    # second torus: rotate the xy-plane torus into the xz-plane, then shift along x
    second = _solid_torus(rng, m, R, r)[:, [0, 2, 1]]
    second[:, 0] += config.torus_separation
    points = np.vstack((first, second))
    if config.noise > 0:
        points = points + rng.normal(0.0, config.noise, points.shape)
    labels = np.repeat([0, 1], m)
    return LabeledDataset(points, labels, 2, feature_names=("x", "y", "z"))


def torus_core_distance(points: np.ndarray, config: SamplerConfig, which: int) -> np.ndarray:
    """Distance of 3-D points to the core circle of torus ``which`` (0 or 1)."""
    p = np.asarray(points, dtype=float)
    if which == 1:
        p = p.copy()
        p[:, 0] -= config.torus_separation
        p = p[:, [0, 2, 1]]
    planar = np.hypot(p[:, 0], p[:, 1]) - config.major_radius
    return np.hypot(planar, p[:, 2])


def sample_labeled_circle(config: SamplerConfig) -> LabeledDataset:
    """Points on a circle around the origin; label 1 on the upper half (y >= 0)."""
    if config.shape != "circle":
        raise ValueError("config.shape must be 'circle'")
    rng = np.random.default_rng(config.seed)
    count = config.num_points if config.num_points is not None else 2 * config.points_per_class
    angles = rng.uniform(0.0, 2 * np.pi, count)
    radii = np.full(count, config.radius)
    if config.noise > 0:
        radii = radii + rng.normal(0.0, config.noise, count)
    points = np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
    labels = (points[:, 1] >= 0).astype(np.int64)
    return LabeledDataset(points, labels, 2, feature_names=("x", "y"))


def circle_labels(points) -> np.ndarray:
    return (np.asarray(points, dtype=float)[:, 1] >= 0).astype(np.int64)


def load_iris_binary(classes: tuple[int, int] = (0, 1)) -> LabeledDataset:
    """Two classes of the Iris data (50 points each, 4 features), relabeled 0/1."""
    from sklearn.datasets import load_iris

    if len(set(classes)) != 2 or not set(classes) <= {0, 1, 2}:
        raise ValueError(f"need two distinct Iris classes out of 0, 1, 2; got {classes!r}")
    iris = load_iris()
    keep = np.isin(iris.target, classes)
    labels = np.searchsorted(sorted(classes), iris.target[keep])
    names = tuple(n.replace(" (cm)", "").replace(" ", "_") for n in iris.feature_names)
    return LabeledDataset(iris.data[keep], labels, 2, feature_names=names)
