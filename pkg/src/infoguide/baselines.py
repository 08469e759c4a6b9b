"""Internal clustering indices: silhouette, Calinski-Harabasz, gap statistic.

These are the comparison methods the selection harness runs next to the
equivalence-based selector. All of them consume validated partitions and a
shared dispersion decomposition from cluster_summary.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .algorithms import ALGORITHMS, AlgorithmConfig, fit
from .core import Dataset, Partition, derive_seed, make_rng, validate_partition
from .errors import (
    EmptyScores,
    InvalidB,
    KTooSmall,
    ProfileTooShort,
    ZeroWithinDispersion,
)


@dataclass(frozen=True)
class ClusterSummary:
    """Centroid/dispersion decomposition of a partition.

    ssw is the total within-cluster sum of squared distances to centroids;
    ssb the size-weighted squared distance of centroids to the grand mean.
    ssw + ssb equals the total sum of squares around the grand mean.
    """

    centroids: np.ndarray
    grand_mean: np.ndarray
    ssw: float
    ssb: float


@dataclass(frozen=True)
class MetricScore:
    metric_name: str
    k: int
    value: float


@dataclass(frozen=True)
class GapPoint:
    k: int
    gap: float
    s_k: float
    log_ssw: float
    expected_log_ssw_random: float


@dataclass(frozen=True)
class GapProfile:
    """Gap curve over a k range, with its reference-dispersion bookkeeping."""

    per_k: tuple
    reference_count: int
    seed: int

    def ks(self) -> tuple:
        return tuple(point.k for point in self.per_k)


def cluster_summary(dataset: Dataset, partition: Partition) -> ClusterSummary:
    validate_partition(partition, dataset.n_points)
    x = dataset.values
    k = partition.k
    centroids = np.empty((k, dataset.n_features))
    ssw = 0.0
    ssb = 0.0
    grand_mean = x.mean(axis=0)
    for cid in range(k):
        members = x[partition.assignments == cid]
        centroids[cid] = members.mean(axis=0)
        diff = members - centroids[cid]
        ssw += float(np.sum(diff * diff))
        offset = centroids[cid] - grand_mean
        ssb += members.shape[0] * float(offset @ offset)
    return ClusterSummary(centroids=centroids, grand_mean=grand_mean, ssw=ssw, ssb=ssb)


def silhouette(dataset: Dataset, partition: Partition) -> MetricScore:
    """Mean silhouette width over all points.

    For point p in a cluster of size m > 1, a(p) is its mean Euclidean
    distance to the other m-1 members and b(p) the smallest mean distance
    to any other cluster; s(p) = (b - a) / max(a, b). Points in singleton
    clusters score 0, as does any point with a == b == 0.
    """
    validate_partition(partition, dataset.n_points)
    if partition.k < 2:
        raise KTooSmall("silhouette needs at least 2 clusters")
    x = dataset.values
    n = dataset.n_points
    k = partition.k
    # Pairwise distances from explicit coordinate differences, in row
    # blocks of ~32MB: the expanded |x|^2 + |y|^2 - 2xy form cancels
    # catastrophically for near-coincident points.
    dist = np.empty((n, n))
    block = max(1, (1 << 22) // max(1, n * dataset.n_features))
    for start in range(0, n, block):
        stop = min(n, start + block)
        diff = x[start:stop, None, :] - x[None, :, :]
        dist[start:stop] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    onehot = np.zeros((n, k))
    onehot[np.arange(n), partition.assignments] = 1.0
    sums = dist @ onehot
    sizes = partition.cluster_sizes.astype(np.float64)

    own = partition.assignments
    own_size = sizes[own]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[np.arange(n), own] / np.maximum(own_size - 1.0, 1.0)
        means = sums / sizes[None, :]
    means[np.arange(n), own] = np.inf
    b = means.min(axis=1)

    denom = np.maximum(a, b)
    s = np.zeros(n)
    positive = denom > 0
    s[positive] = (b[positive] - a[positive]) / denom[positive]
    s[own_size < 2] = 0.0
    return MetricScore("silhouette", k, float(s.mean()))


def calinski_harabasz(dataset: Dataset, partition: Partition) -> MetricScore:
    """Between/within dispersion ratio scaled by (n - k) / (k - 1)."""
    validate_partition(partition, dataset.n_points)
    if partition.k < 2:
        raise KTooSmall("calinski-harabasz needs at least 2 clusters")
    summary = cluster_summary(dataset, partition)
    if summary.ssw == 0.0:
        raise ZeroWithinDispersion("within-cluster dispersion is zero")
    n = dataset.n_points
    k = partition.k
    value = (summary.ssb / summary.ssw) * ((n - k) / (k - 1))
    return MetricScore("calinski_harabasz", k, float(value))


def _log_ssw(dataset: Dataset, algorithm: str, k: int, config: AlgorithmConfig) -> float:
    partition = fit(algorithm, dataset, k, config)
    ssw = cluster_summary(dataset, partition).ssw
    if ssw <= 0.0:
        raise ZeroWithinDispersion(
            f"within-cluster dispersion is zero at k={k}"
        )
    return float(np.log(ssw))


def gap_statistic(
    dataset: Dataset,
    algorithm: str,
    k_range: tuple,
    reference_count: int = 10,
    config: AlgorithmConfig = AlgorithmConfig(),
    include_sd_correction: bool = True,
) -> GapProfile:
    """Gap curve: expected log-dispersion under a structureless reference
    minus the observed log-dispersion, per k.

    References are uniform draws over the per-feature bounding box of the
    data, refitted with the same algorithm. s_k is the reference standard
    deviation (population form) scaled by sqrt(1 + 1/B) unless
    include_sd_correction is False. Reference b draws its own seed stream
    derived from (config.seed, b), so worker order cannot change results.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if reference_count < 2:
        raise InvalidB(f"reference_count must be >= 2, got {reference_count}")
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    if k_lo < 1 or k_hi < k_lo:
        raise ProfileTooShort(f"invalid k range [{k_lo}, {k_hi}]")
    x = dataset.values
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    ks = list(range(k_lo, k_hi + 1))

    observed = {}
    for k in ks:
        k_config = replace(config, seed=derive_seed(config.seed, "gap-data", k))
        observed[k] = _log_ssw(dataset, algorithm, k, k_config)

    reference_logs = np.empty((reference_count, len(ks)))
    for b in range(reference_count):
        rng = make_rng(derive_seed(config.seed, "gap-reference", b))
        ref_values = rng.uniform(lo, hi, size=x.shape)
        ref = Dataset(ref_values, dataset.feature_names, name=f"{dataset.name}-ref{b}")
        for pos, k in enumerate(ks):
            k_config = replace(
                config, seed=derive_seed(config.seed, "gap-reference", b, k)
            )
            reference_logs[b, pos] = _log_ssw(ref, algorithm, k, k_config)

    correction = np.sqrt(1.0 + 1.0 / reference_count) if include_sd_correction else 1.0
    points = []
    for pos, k in enumerate(ks):
        expected = float(reference_logs[:, pos].mean())
        spread = float(reference_logs[:, pos].std(ddof=0)) * correction
        points.append(
            GapPoint(
                k=k,
                gap=expected - observed[k],
                s_k=spread,
                log_ssw=observed[k],
                expected_log_ssw_random=expected,
            )
        )
    return GapProfile(per_k=tuple(points), reference_count=reference_count, seed=config.seed)


def select_k_gap(profile: GapProfile) -> int:
    """Smallest k with Gap(k) >= Gap(k+1) - s_(k+1); the largest k otherwise."""
    if len(profile.per_k) < 2:
        raise ProfileTooShort("gap selection needs at least two profile points")
    for point, successor in zip(profile.per_k, profile.per_k[1:]):
        if point.gap >= successor.gap - successor.s_k:
            return point.k
    return profile.per_k[-1].k


def select_k_argmax(scores) -> int:
    """k of the highest finite score; ties go to the smallest k."""
    best_k = None
    best_value = -np.inf
    for score in sorted(scores, key=lambda s: s.k):
        if not np.isfinite(score.value):
            continue
        if score.value > best_value:
            best_value = score.value
            best_k = score.k
    if best_k is None:
        raise EmptyScores("no finite scores to select from")
    return int(best_k)
