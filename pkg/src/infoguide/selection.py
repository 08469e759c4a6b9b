"""Cluster-count selection by distributional equivalence of successive retrievals.

The idea: fit the data at every candidate k. If the k+1-cluster retrieval
carries no new distributional information over the k-cluster one, then k
clusters already describe the data, and the selected count is the smallest
such k.

Two clusters are compared through their within-cluster feature
distributions: each cluster's feature values are standardized by that
cluster's own mean and standard deviation (the deviations x - <c> around
the cluster estimate, put on a common scale), and equivalence requires
every feature's two-sample KS p-value to clear a Bonferroni-corrected
level alpha_u / (F * (k+1) * k) for F features and (k+1)*k cluster pairs.
A genuinely new cluster (one that isolates structure the coarser retrieval
mixed together) changes the within-cluster distribution shape and rejects;
a redundant cluster (a re-cut of structure the coarser retrieval already
had) does not. Retrieval-level equivalence then asks every cluster on
both sides to have at least one equivalent counterpart on the other
(directions are configurable).

The selected count is maximized over a grid of working levels alpha_u in
(0, alpha]; since the selected k is monotone non-decreasing in alpha_u,
the default path evaluates the grid's largest value only and the literal
sweep sits behind full_sweep=True.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Partition, RetrievalSeries
from .errors import (
    EmptyGrid,
    EmptySample,
    FeatureCountMismatch,
    InvalidAlpha,
    LengthMismatch,
    ShapeMismatch,
)
from .stats import _ks_statistic_sorted, bonferroni_threshold, ks_p_value

# Cluster pairs where either side has fewer points than this are flagged in
# the report; the test still runs, but its asymptotic p-value is crude.
_SMALL_SAMPLE = 5

DIRECTIONS = ("both", "fine_in_coarse", "coarse_in_fine")


@dataclass(frozen=True)
class EquivalenceReport:
    """Evidence behind one retrieval-pair comparison.

    p_values has shape (k+1, k, F): entry [i, j, f] tests cluster i of the
    finer retrieval against cluster j of the coarser one on feature f. Pairs
    touching an empty cluster hold NaN. cluster_equivalence[i, j] is True
    when all F p-values clear the threshold.
    """

    k: int
    k_plus_1: int
    threshold: float
    p_values: np.ndarray
    cluster_equivalence: np.ndarray
    equivalent: bool
    small_sample_pairs: np.ndarray


@dataclass(frozen=True)
class InfoGuideResult:
    """Outcome of a full selection run."""

    k_hat: int
    alpha: float
    alpha_grid: tuple
    per_alpha_k: dict
    reports: tuple


def clusters_equivalent(features_a, features_b, threshold: float):
    """Per-feature KS equivalence of two clusters.

    features_a and features_b are sequences of 1-D samples, one per feature
    (the same feature order on both sides). Returns (equivalent, p_values):
    equivalent is True when every feature's p-value is >= threshold.
    """
    if len(features_a) != len(features_b):
        raise FeatureCountMismatch(
            f"{len(features_a)} features vs {len(features_b)}"
        )
    p_values = np.empty(len(features_a))
    for f, (sample_a, sample_b) in enumerate(zip(features_a, features_b)):
        a = np.sort(np.asarray(sample_a, dtype=np.float64).ravel())
        b = np.sort(np.asarray(sample_b, dtype=np.float64).ravel())
        if a.size == 0 or b.size == 0:
            raise EmptySample("clusters under comparison must be non-empty")
        d = _ks_statistic_sorted(a, b)
        p_values[f] = ks_p_value(d, a.size, b.size)
    return bool(np.all(p_values >= threshold)), p_values


def _sorted_cluster_columns(
    dataset: Dataset, partition: Partition, standardize: bool = True
) -> list:
    """Per cluster: its (n_i, F) feature block with each column sorted.

    With standardize=True (the default used by retrieval comparison) each
    cluster's columns are shifted and scaled by that cluster's own mean and
    standard deviation, so the comparison sees the within-cluster
    distribution shape rather than the cluster's position in feature space.
    A constant column keeps scale 1 to stay finite. Empty clusters yield
    None.
    """
    blocks = []
    for cid in range(partition.k):
        rows = dataset.values[partition.assignments == cid]
        if not rows.shape[0]:
            blocks.append(None)
            continue
        if standardize:
            scale = rows.std(axis=0)
            scale[scale == 0.0] = 1.0
            rows = (rows - rows.mean(axis=0)) / scale
        blocks.append(np.sort(rows, axis=0))
    return blocks


def _pairwise_p_values(
    dataset: Dataset,
    finer: Partition,
    coarser: Partition,
    standardize: bool = True,
) -> np.ndarray:
    f_count = dataset.n_features
    fine_blocks = _sorted_cluster_columns(dataset, finer, standardize)
    coarse_blocks = _sorted_cluster_columns(dataset, coarser, standardize)
    p = np.full((finer.k, coarser.k, f_count), np.nan)
    for i, block_a in enumerate(fine_blocks):
        if block_a is None:
            continue
        n1 = block_a.shape[0]
        for j, block_b in enumerate(coarse_blocks):
            if block_b is None:
                continue
            n2 = block_b.shape[0]
            for f in range(f_count):
                d = _ks_statistic_sorted(block_a[:, f], block_b[:, f])
                p[i, j, f] = ks_p_value(d, n1, n2)
    return p


def _report_from_p_values(
    p: np.ndarray,
    fine_sizes: np.ndarray,
    coarse_sizes: np.ndarray,
    alpha_u: float,
    direction: str,
) -> EquivalenceReport:
    k_plus_1, k, f_count = p.shape
    threshold = bonferroni_threshold(alpha_u, f_count * k_plus_1 * k)
    with np.errstate(invalid="ignore"):
        cluster_eq = np.all(np.nan_to_num(p, nan=-1.0) >= threshold, axis=2)
    fine_nonempty = fine_sizes > 0
    coarse_nonempty = coarse_sizes > 0
    # empty clusters carry no distribution: they can neither demand nor
    # provide a match
    usable = cluster_eq & fine_nonempty[:, None] & coarse_nonempty[None, :]
    fine_covered = bool(np.all(usable.any(axis=1)[fine_nonempty]))
    coarse_covered = bool(np.all(usable.any(axis=0)[coarse_nonempty]))
    if direction == "both":
        equivalent = fine_covered and coarse_covered
    elif direction == "fine_in_coarse":
        equivalent = fine_covered
    elif direction == "coarse_in_fine":
        equivalent = coarse_covered
    else:
        raise ShapeMismatch(f"unknown direction {direction!r}")
    small = (
        (fine_sizes[:, None] < _SMALL_SAMPLE) | (coarse_sizes[None, :] < _SMALL_SAMPLE)
    ) & fine_nonempty[:, None] & coarse_nonempty[None, :]
    return EquivalenceReport(
        k=k,
        k_plus_1=k_plus_1,
        threshold=threshold,
        p_values=p,
        cluster_equivalence=usable,
        equivalent=equivalent,
        small_sample_pairs=small,
    )


def retrievals_equivalent(
    dataset: Dataset,
    finer: Partition,
    coarser: Partition,
    alpha_u: float,
    direction: str = "both",
    standardize: bool = True,
) -> EquivalenceReport:
    """Compare a k+1-cluster retrieval against a k-cluster one.

    Under the default direction every non-empty cluster of the finer
    retrieval must have at least one equivalent non-empty cluster in the
    coarser one AND vice versa; "fine_in_coarse" / "coarse_in_fine" keep
    only the respective half of that requirement. With standardize=True
    (default) each cluster's features are put on its own mean/scale before
    testing, so equivalence reads distribution shape; standardize=False
    compares raw feature values, which additionally demands positional
    overlap.
    """
    if finer.k != coarser.k + 1:
        raise ShapeMismatch(
            f"finer retrieval must have k+1 clusters, got {finer.k} vs {coarser.k}"
        )
    if finer.n_points != coarser.n_points or finer.n_points != dataset.n_points:
        raise LengthMismatch("partitions and dataset must cover the same points")
    if direction not in DIRECTIONS:
        raise ShapeMismatch(f"unknown direction {direction!r}")
    p = _pairwise_p_values(dataset, finer, coarser, standardize)
    return _report_from_p_values(
        p, finer.cluster_sizes, coarser.cluster_sizes, alpha_u, direction
    )


def default_alpha_grid(alpha: float, points: int = 20) -> tuple:
    """Log-spaced working levels spanning (alpha/1000, alpha]."""
    if not 0.0 < alpha <= 1.0:
        raise InvalidAlpha(f"alpha must be in (0, 1], got {alpha}")
    return tuple(float(a) for a in np.geomspace(alpha / 1000.0, alpha, points))


def select_k_infoguide(
    dataset: Dataset,
    retrievals: RetrievalSeries,
    alpha: float = 0.05,
    alpha_grid=None,
    direction: str = "both",
    standardize: bool = True,
    full_sweep: bool = False,
) -> InfoGuideResult:
    """Select the cluster count as the smallest k whose successor adds nothing.

    For a working level alpha_u, the candidate is the smallest
    k in [k_min, k_max - 1] with retrievals_equivalent(C(k+1), C(k)); if none
    qualifies the candidate is k_max. The reported k_hat maximizes the
    candidate over the alpha_u grid. The candidate is monotone
    non-decreasing in alpha_u (a larger working level only shrinks the set
    of passing comparisons), so by default only the largest grid value is
    evaluated; full_sweep=True runs the literal sweep and reports every
    grid point's candidate.
    """
    if not 0.0 < alpha <= 1.0:
        raise InvalidAlpha(f"alpha must be in (0, 1], got {alpha}")
    if alpha_grid is None:
        alpha_grid = default_alpha_grid(alpha)
    grid = tuple(float(a) for a in alpha_grid)
    if not grid:
        raise EmptyGrid("alpha grid is empty")
    for a_u in grid:
        if not 0.0 < a_u <= alpha:
            raise InvalidAlpha(f"grid value {a_u} outside (0, {alpha}]")
    if direction not in DIRECTIONS:
        raise ShapeMismatch(f"unknown direction {direction!r}")

    # the p-value tensor for a (k, k+1) pair does not depend on alpha_u, so
    # it is computed once and re-thresholded per grid point
    tensors: dict = {}

    def p_tensor(k: int) -> np.ndarray:
        if k not in tensors:
            tensors[k] = _pairwise_p_values(
                dataset,
                retrievals.partition_for(k + 1),
                retrievals.partition_for(k),
                standardize,
            )
        return tensors[k]

    def candidate(alpha_u: float, collect: bool = False):
        reports = []
        chosen = retrievals.k_max
        for k in range(retrievals.k_min, retrievals.k_max):
            report = _report_from_p_values(
                p_tensor(k),
                retrievals.partition_for(k + 1).cluster_sizes,
                retrievals.partition_for(k).cluster_sizes,
                alpha_u,
                direction,
            )
            if collect:
                reports.append(report)
            if report.equivalent:
                chosen = k
                break
        return chosen, reports

    per_alpha_k = {}
    if full_sweep:
        for a_u in grid:
            per_alpha_k[a_u], _ = candidate(a_u)
        k_hat = max(per_alpha_k.values())
        selected_alpha = max(
            a_u for a_u, k in per_alpha_k.items() if k == k_hat
        )
    else:
        selected_alpha = max(grid)
        k_hat, _ = candidate(selected_alpha)
        per_alpha_k[selected_alpha] = k_hat
    _, reports = candidate(selected_alpha, collect=True)
    return InfoGuideResult(
        k_hat=int(k_hat),
        alpha=float(alpha),
        alpha_grid=grid,
        per_alpha_k=per_alpha_k,
        reports=tuple(reports),
    )
