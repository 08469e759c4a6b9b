"""Clustering algorithms: k-means, Gaussian mixture EM, Ward agglomerative.

All three return partitions that satisfy the full partition invariants
(every declared cluster non-empty) unless empty-cluster repair is explicitly
disabled. Randomized algorithms draw every stream through derive_seed, so a
fit is a pure function of (dataset, k, config).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import Dataset, Partition, RetrievalSeries, derive_seed, make_rng
from .errors import DatasetTooSmall, SingularCovariance

# Floor on the absolute objective scale when testing relative convergence,
# so all-identical data (objective exactly 0) still converges.
_REL_FLOOR = 1e-12


@dataclass(frozen=True)
class AlgorithmConfig:
    """Shared knobs for the iterative algorithms.

    convergence_tolerance is relative: iteration stops once the objective
    changes by no more than tol * (|objective| + 1e-12). restarts > 1 keeps
    the best run by objective; restart i draws its own derived seed stream,
    so raising the restart count only appends candidate runs and can never
    worsen the kept objective. empty_cluster_repair exists because some
    degenerate-input behaviours are only reachable with repair off.
    """

    max_iterations: int = 300
    convergence_tolerance: float = 1e-6
    restarts: int = 1
    seed: int = 0
    covariance_regularization: float = 1e-6
    empty_cluster_repair: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_tolerance < 0:
            raise ValueError("convergence_tolerance must be >= 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.covariance_regularization < 0:
            raise ValueError("covariance_regularization must be >= 0")


@dataclass(frozen=True)
class FitDiagnostics:
    """Objective trace of one accepted run.

    For k-means the trace is total within-cluster sum of squares per Lloyd
    iteration (non-increasing); for the mixture it is log-likelihood per EM
    iteration (non-decreasing). iterations_run == len(objective_trace).
    """

    objective_trace: tuple
    iterations_run: int
    converged: bool


def _check_size(dataset: Dataset, k: int) -> None:
    if k < 1:
        raise DatasetTooSmall(f"k must be >= 1, got {k}")
    if dataset.n_points < k:
        raise DatasetTooSmall(
            f"{dataset.n_points} points cannot form {k} clusters"
        )


def _sq_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n, k)."""
    d2 = (
        np.sum(x * x, axis=1)[:, None]
        - 2.0 * x @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _ssw(x: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    diff = x - centers[labels]
    return float(np.sum(diff * diff))


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: squared-distance-weighted center draws."""
    n = x.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining mass sits on already-chosen coordinates
            # (duplicate-heavy data): fall back to a uniform unchosen point
            idx = int(rng.choice(np.flatnonzero(~taken)))
        chosen[j] = idx
        taken[idx] = True
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return x[chosen].copy()


def _repair_empty(
    x: np.ndarray, labels: np.ndarray, centers: np.ndarray, k: int
) -> np.ndarray:
    """Reassign, per empty cluster, the point farthest from its own centroid.

    Donors are restricted to clusters with at least two members so a repair
    never creates a new empty cluster; ties go to the lowest point index.
    Carving an extremal point out into its own singleton strictly lowers the
    within-cluster sum of squares, so the objective trace stays monotone.
    """
    labels = labels.copy()
    sizes = np.bincount(labels, minlength=k)
    for empty_id in np.flatnonzero(sizes == 0):
        own_d2 = np.sum((x - centers[labels]) ** 2, axis=1)
        own_d2[sizes[labels] < 2] = -np.inf
        donor = int(np.argmax(own_d2))
        sizes[labels[donor]] -= 1
        labels[donor] = empty_id
        sizes[empty_id] += 1
    return labels


def _lloyd(x: np.ndarray, k: int, rng: np.random.Generator, config: AlgorithmConfig):
    centers = _kmeans_pp(x, k, rng)
    trace = []
    prev = np.inf
    converged = False
    for _ in range(config.max_iterations):
        labels = np.argmin(_sq_distances(x, centers), axis=1)
        if config.empty_cluster_repair and np.bincount(labels, minlength=k).min() == 0:
            labels = _repair_empty(x, labels, centers, k)
        for cid in range(k):
            mask = labels == cid
            if mask.any():
                centers[cid] = x[mask].mean(axis=0)
        objective = _ssw(x, labels, centers)
        trace.append(objective)
        if prev - objective <= config.convergence_tolerance * (abs(prev) + _REL_FLOOR):
            converged = True
            break
        prev = objective
    return labels, centers, trace, converged


def kmeans(dataset: Dataset, k: int, config: AlgorithmConfig = AlgorithmConfig()):
    """Lloyd's algorithm with k-means++ seeding.

    Returns (Partition, FitDiagnostics) for the best restart by final
    objective. Raises DatasetTooSmall when the dataset has fewer than k
    points.
    """
    _check_size(dataset, k)
    x = dataset.values
    best = None
    for restart in range(config.restarts):
        rng = make_rng(derive_seed(config.seed, "kmeans", restart))
        labels, _, trace, converged = _lloyd(x, k, rng, config)
        if best is None or trace[-1] < best[2][-1]:
            best = (labels, converged, trace)
    labels, converged, trace = best
    diagnostics = FitDiagnostics(
        objective_trace=tuple(trace),
        iterations_run=len(trace),
        converged=converged,
    )
    return Partition(labels, k), diagnostics


# --- Gaussian mixture -------------------------------------------------------


def _chol_or_raise(cov: np.ndarray, regularization: float) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        if regularization == 0.0:
            raise SingularCovariance(
                "component covariance is singular and regularization is 0"
            ) from None
        raise


def _component_log_pdf(x: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> np.ndarray:
    f = x.shape[1]
    y = np.linalg.solve(chol, (x - mean).T)
    log_det = float(np.sum(np.log(np.diag(chol))))
    maha = np.sum(y * y, axis=0)
    return -0.5 * (f * np.log(2.0 * np.pi) + maha) - log_det


def _e_step(x, weights, means, chols):
    n = x.shape[0]
    k = weights.shape[0]
    log_w = np.log(np.maximum(weights, 1e-300))
    log_prob = np.empty((n, k))
    for j in range(k):
        log_prob[:, j] = log_w[j] + _component_log_pdf(x, means[j], chols[j])
    row_max = log_prob.max(axis=1, keepdims=True)
    log_norm = row_max[:, 0] + np.log(np.exp(log_prob - row_max).sum(axis=1))
    resp = np.exp(log_prob - log_norm[:, None])
    return resp, float(log_norm.sum())


def _init_mixture(x: np.ndarray, partition: Partition, regularization: float):
    k = partition.k
    f = x.shape[1]
    weights = partition.cluster_sizes / x.shape[0]
    means = np.empty((k, f))
    covs = np.empty((k, f, f))
    eye = np.eye(f)
    for j in range(k):
        members = x[partition.assignments == j]
        means[j] = members.mean(axis=0)
        centered = members - means[j]
        covs[j] = centered.T @ centered / members.shape[0] + regularization * eye
    return weights, means, covs


def _m_step(x, resp, weights, means, covs, regularization):
    n, f = x.shape
    counts = resp.sum(axis=0)
    eye = np.eye(f)
    new_weights = counts / n
    new_means = means.copy()
    new_covs = covs.copy()
    for j in range(resp.shape[1]):
        if counts[j] < 1e-10:
            # a component that lost all responsibility keeps its previous
            # mean and covariance; hard assignment will leave it empty and
            # the repair step deals with that
            continue
        new_means[j] = resp[:, j] @ x / counts[j]
        centered = x - new_means[j]
        new_covs[j] = (
            (resp[:, j] * centered.T) @ centered / counts[j] + regularization * eye
        )
        new_covs[j] = 0.5 * (new_covs[j] + new_covs[j].T)
    total = new_weights.sum()
    if total > 0:
        new_weights = new_weights / total
    return new_weights, new_means, new_covs


def _em(x, weights, means, covs, config):
    reg = config.covariance_regularization
    chols = [_chol_or_raise(c, reg) for c in covs]
    resp, ll = _e_step(x, weights, means, chols)
    trace = [ll]
    converged = False
    for _ in range(config.max_iterations - 1):
        weights, means, covs = _m_step(x, resp, weights, means, covs, reg)
        chols = [_chol_or_raise(c, reg) for c in covs]
        resp, ll = _e_step(x, weights, means, chols)
        prev = trace[-1]
        trace.append(ll)
        if abs(ll - prev) <= config.convergence_tolerance * (abs(prev) + _REL_FLOOR):
            converged = True
            break
    return resp, (weights, means, covs), trace, converged


def gmm_em(dataset: Dataset, k: int, config: AlgorithmConfig = AlgorithmConfig()):
    """Full-covariance Gaussian mixture fitted by EM, hard-assigned by posterior.

    Each restart initializes from its own k-means run (weights, means, and
    covariances of the hard clusters, plus diagonal regularization). The
    reported trace is the log-likelihood after every EM iteration and is
    non-decreasing. Points go to their maximum-posterior component;
    components left empty by the hard assignment are repaired the same way
    k-means repairs them.
    """
    _check_size(dataset, k)
    x = dataset.values
    best = None
    for restart in range(config.restarts):
        seed = derive_seed(config.seed, "gmm", restart)
        km_config = replace(config, restarts=1, seed=seed, empty_cluster_repair=True)
        init_partition, _ = kmeans(dataset, k, km_config)
        weights, means, covs = _init_mixture(
            x, init_partition, config.covariance_regularization
        )
        resp, params, trace, converged = _em(x, weights, means, covs, config)
        if best is None or trace[-1] > best[3][-1]:
            best = (resp, params, converged, trace)
    resp, (weights, means, covs), converged, trace = best
    labels = np.argmax(resp, axis=1)
    if config.empty_cluster_repair and np.bincount(labels, minlength=k).min() == 0:
        labels = _repair_empty(x, labels, means, k)
    diagnostics = FitDiagnostics(
        objective_trace=tuple(trace),
        iterations_run=len(trace),
        converged=converged,
    )
    return Partition(labels, k), diagnostics


# --- Ward agglomerative -----------------------------------------------------


def _ward_merge_sequence(x: np.ndarray) -> list:
    """Greedy Ward merges as (slot_i, slot_j) pairs with slot_i < slot_j.

    The merge cost between clusters A and B is
    |A||B| / (|A|+|B|) * ||mu_A - mu_B||^2, seeded as half the squared
    point distance and maintained by the Lance-Williams recurrence. The
    merged cluster occupies slot min(i, j); cost ties pick the
    lexicographically smallest active (i, j).

    Row-minimum caches keep each step near O(n). A cached row minimum only
    needs a rescan when its argmin column was one of the merged slots:
    because the merged pair is the global minimum, the recurrence never
    produces a distance below the smaller of the two it replaces.
    """
    n = x.shape[0]
    if n == 1:
        return []
    sq = np.sum(x * x, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    d *= 0.5
    np.fill_diagonal(d, np.inf)

    size = np.ones(n)
    alive = np.ones(n, dtype=bool)
    row_min = d.min(axis=1)
    row_arg = d.argmin(axis=1)
    merges = []
    for _ in range(n - 1):
        masked = np.where(alive, row_min, np.inf)
        i = int(np.argmin(masked))
        # recompute the column so a stale cache cannot misreport a tie
        j = int(np.argmin(d[i]))
        merges.append((i, j))

        si, sj = size[i], size[j]
        combined = (
            (size + si) * d[i] + (size + sj) * d[j] - size * d[i, j]
        ) / (size + si + sj)
        combined[~alive] = np.inf
        combined[i] = np.inf
        combined[j] = np.inf
        d[i, :] = combined
        d[:, i] = combined
        d[j, :] = np.inf
        d[:, j] = np.inf
        size[i] += sj
        alive[j] = False

        row_arg[i] = int(np.argmin(d[i]))
        row_min[i] = d[i, row_arg[i]]
        row_min[j] = np.inf

        others = np.flatnonzero(alive)
        others = others[others != i]
        if others.size:
            rescan = others[(row_arg[others] == i) | (row_arg[others] == j)]
            if rescan.size:
                args = np.argmin(d[rescan], axis=1)
                row_arg[rescan] = args
                row_min[rescan] = d[rescan, args]
            better = others[d[others, i] < row_min[others]]
            if better.size:
                row_min[better] = d[better, i]
                row_arg[better] = i
    return merges


def _cut_merges(n: int, merges, k: int) -> Partition:
    parent = np.arange(n)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in merges[: n - k]:
        ri, rj = find(i), find(j)
        parent[max(ri, rj)] = min(ri, rj)

    roots = np.fromiter((find(p) for p in range(n)), dtype=np.int64, count=n)
    # contiguous ids ordered by each cluster's first point
    order = {}
    labels = np.empty(n, dtype=np.int64)
    for p in range(n):
        root = roots[p]
        if root not in order:
            order[root] = len(order)
        labels[p] = order[root]
    return Partition(labels, k)


def ward_agglomerative(dataset: Dataset, k: int) -> Partition:
    """Deterministic bottom-up Ward clustering cut at k clusters.

    Cluster ids are ordered by each cluster's lowest point index, so
    repeated calls return identical partitions.
    """
    _check_size(dataset, k)
    merges = _ward_merge_sequence(dataset.values)
    return _cut_merges(dataset.n_points, merges, k)


def ward_series(dataset: Dataset, k_min: int, k_max: int) -> RetrievalSeries:
    """All Ward cuts for k in [k_min, k_max] from a single merge sequence."""
    _check_size(dataset, k_max)
    merges = _ward_merge_sequence(dataset.values)
    partitions = tuple(
        _cut_merges(dataset.n_points, merges, k) for k in range(k_min, k_max + 1)
    )
    return RetrievalSeries("ward", k_min, k_max, partitions)


# --- dispatch ---------------------------------------------------------------

ALGORITHMS = ("kmeans", "gmm", "ward")


def fit(name: str, dataset: Dataset, k: int, config: AlgorithmConfig) -> Partition:
    """Fit one algorithm by name and return just the partition."""
    if name == "kmeans":
        return kmeans(dataset, k, config)[0]
    if name == "gmm":
        return gmm_em(dataset, k, config)[0]
    if name == "ward":
        return ward_agglomerative(dataset, k)
    raise ValueError(f"unknown algorithm {name!r}")


def fit_series(
    name: str, dataset: Dataset, k_min: int, k_max: int, config: AlgorithmConfig
) -> RetrievalSeries:
    """Independent fits for every k in [k_min, k_max].

    Each k draws its own derived seed stream so the retrievals share no
    initialization. Ward reuses one merge sequence because its cuts are
    nested by construction and carry no randomness.
    """
    if name == "ward":
        return ward_series(dataset, k_min, k_max)
    partitions = []
    for k in range(k_min, k_max + 1):
        k_config = replace(config, seed=derive_seed(config.seed, "series", k))
        partitions.append(fit(name, dataset, k, k_config))
    return RetrievalSeries(name, k_min, k_max, tuple(partitions))
