"""Core data model: datasets, partitions, retrieval series, and seeding.

Everything downstream (algorithms, equivalence testing, the experiment
harness) passes these types around, so their invariants are checked eagerly
where cheap and via :func:`validate_partition` where the caller decides.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyCluster,
    IndexOutOfBounds,
    InvalidDataset,
    LengthMismatch,
    MissingRetrieval,
    OutOfRangeLabel,
)

RngSeed = int


def derive_seed(root: RngSeed, *parts) -> RngSeed:
    """Derive an independent 64-bit seed from a root seed and a label path.

    The derivation is a pure function of its arguments, so any unit of work
    keyed by (root, parts) draws the same random stream no matter which
    worker runs it or in what order.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root)).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "big")


def make_rng(seed: RngSeed) -> np.random.Generator:
    """Build the generator used everywhere randomness is needed."""
    return np.random.default_rng(int(seed) % (1 << 64))


@dataclass(frozen=True)
class Dataset:
    """A numeric table of shape (n_points, n_features), optionally labeled.

    Parameters
    ----------
    values : array-like, shape (n_points, n_features)
        Finite float features. Stored as a read-only float64 array.
    feature_names : sequence of str
        One name per column.
    labels : array-like of int, optional
        Ground-truth cluster ids, contiguous from 0. None when the dataset
        has no known structure.
    name : str
        Identifier used in records and seed derivation.
    """

    values: np.ndarray
    feature_names: tuple
    labels: np.ndarray | None = None
    name: str = "dataset"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidDataset(f"values must be 2-D, got ndim={values.ndim}")
        n, f = values.shape
        if n < 1 or f < 1:
            raise InvalidDataset(f"values must be non-empty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidDataset("values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        names = tuple(str(c) for c in self.feature_names)
        if len(names) != f:
            raise InvalidDataset(
                f"{len(names)} feature names for {f} columns"
            )
        object.__setattr__(self, "feature_names", names)

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise InvalidDataset(
                    f"labels shape {labels.shape} does not match {n} points"
                )
            if not np.issubdtype(labels.dtype, np.integer):
                rounded = np.asarray(labels, dtype=np.float64)
                if not np.all(rounded == np.floor(rounded)):
                    raise InvalidDataset("labels must be integers")
                labels = rounded.astype(np.int64)
            labels = labels.astype(np.int64)
            if labels.min() != 0 or not np.array_equal(
                np.unique(labels), np.arange(labels.max() + 1)
            ):
                raise InvalidDataset("labels must be contiguous ids starting at 0")
            labels = labels.copy()
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def k_star(self) -> int | None:
        """Number of ground-truth clusters, or None when unlabeled."""
        if self.labels is None:
            return None
        return int(self.labels.max()) + 1

    def feature_column(self, feature_id: int) -> np.ndarray:
        if not 0 <= feature_id < self.n_features:
            raise IndexOutOfBounds(
                f"feature {feature_id} outside [0, {self.n_features})"
            )
        return self.values[:, feature_id]

    def label_partition(self) -> "Partition":
        """Ground-truth labels as a Partition."""
        if self.labels is None:
            raise InvalidDataset(f"dataset {self.name!r} has no labels")
        return Partition(self.labels, self.k_star)


@dataclass(frozen=True)
class Partition:
    """An assignment of every point to one of k clusters.

    Construction is permissive (algorithms with repair disabled can emit
    empty clusters; validation helpers need to be able to hold malformed
    instances); :func:`validate_partition` enforces the full invariants.
    """

    assignments: np.ndarray
    k: int
    cluster_sizes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        assignments = np.asarray(self.assignments)
        if assignments.ndim != 1:
            raise LengthMismatch("assignments must be 1-D")
        assignments = assignments.astype(np.int64).copy()
        assignments.setflags(write=False)
        object.__setattr__(self, "assignments", assignments)
        object.__setattr__(self, "k", int(self.k))
        in_range = assignments[(assignments >= 0) & (assignments < self.k)]
        sizes = np.bincount(in_range, minlength=max(self.k, 0))[: max(self.k, 0)]
        sizes.setflags(write=False)
        object.__setattr__(self, "cluster_sizes", sizes)

    @property
    def n_points(self) -> int:
        return self.assignments.shape[0]

    def members(self, cluster_id: int) -> np.ndarray:
        """Point indices of one cluster, in point order."""
        if not 0 <= cluster_id < self.k:
            raise IndexOutOfBounds(f"cluster {cluster_id} outside [0, {self.k})")
        return np.flatnonzero(self.assignments == cluster_id)

    def relabeled(self, mapping) -> "Partition":
        """Apply a cluster-id permutation; mapping[i] is the new id of cluster i."""
        mapping = np.asarray(mapping, dtype=np.int64)
        if mapping.shape != (self.k,) or not np.array_equal(
            np.sort(mapping), np.arange(self.k)
        ):
            raise OutOfRangeLabel("mapping must be a permutation of 0..k-1")
        return Partition(mapping[self.assignments], self.k)


def validate_partition(partition: Partition, n_points: int) -> None:
    """Check the full partition invariants against a dataset size.

    Raises LengthMismatch, OutOfRangeLabel, or EmptyCluster; returns None
    when the partition is valid.
    """
    if partition.k < 1:
        raise LengthMismatch(f"k must be >= 1, got {partition.k}")
    if partition.n_points != n_points:
        raise LengthMismatch(
            f"{partition.n_points} assignments for {n_points} points"
        )
    a = partition.assignments
    if a.size and (a.min() < 0 or a.max() >= partition.k):
        bad = a[(a < 0) | (a >= partition.k)][0]
        raise OutOfRangeLabel(f"assignment {bad} outside [0, {partition.k})")
    empty = np.flatnonzero(partition.cluster_sizes == 0)
    if empty.size:
        raise EmptyCluster(f"cluster {empty[0]} has no members")


def cluster_feature_values(
    dataset: Dataset, partition: Partition, cluster_id: int, feature_id: int
) -> np.ndarray:
    """One cluster's values on one feature, in stable point order."""
    if partition.n_points != dataset.n_points:
        raise LengthMismatch(
            f"partition over {partition.n_points} points, dataset has {dataset.n_points}"
        )
    if not 0 <= cluster_id < partition.k:
        raise IndexOutOfBounds(f"cluster {cluster_id} outside [0, {partition.k})")
    if not 0 <= feature_id < dataset.n_features:
        raise IndexOutOfBounds(
            f"feature {feature_id} outside [0, {dataset.n_features})"
        )
    return dataset.values[partition.assignments == cluster_id, feature_id]


@dataclass(frozen=True)
class RetrievalSeries:
    """Partitions produced by one algorithm for every k in [k_min, k_max]."""

    algorithm: str
    k_min: int
    k_max: int
    partitions: tuple

    def __post_init__(self):
        if self.k_min < 1 or self.k_max < self.k_min:
            raise MissingRetrieval(
                f"invalid k range [{self.k_min}, {self.k_max}]"
            )
        partitions = tuple(self.partitions)
        expected = self.k_max - self.k_min + 1
        if len(partitions) != expected:
            raise MissingRetrieval(
                f"{len(partitions)} partitions for {expected} values of k"
            )
        for offset, part in enumerate(partitions):
            if part.k != self.k_min + offset:
                raise MissingRetrieval(
                    f"partition at position {offset} has k={part.k}, "
                    f"expected {self.k_min + offset}"
                )
        object.__setattr__(self, "partitions", partitions)

    def partition_for(self, k: int) -> Partition:
        if not self.k_min <= k <= self.k_max:
            raise MissingRetrieval(
                f"no retrieval for k={k} in [{self.k_min}, {self.k_max}]"
            )
        return self.partitions[k - self.k_min]
