"""Evaluation against ground truth and against an external outcome.

Labeled datasets are scored by normalized mutual information between the
selected partition and the true one, plus a Wilson interval on the rate of
exact recovery. Unlabeled datasets are scored by how much out-of-sample
variance of an external target the cluster memberships explain beyond the
raw features.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Partition, make_rng
from .errors import (
    DegenerateDof,
    EmptyInput,
    LengthMismatch,
    RankDeficient,
)
from .stats import WilsonInterval, wilson_interval

NMI_NORMALIZATIONS = ("arithmetic", "geometric", "max")

# Tiny ridge on the normal equations; keeps numerically near-collinear
# designs solvable while leaving genuinely rank-deficient ones detectable.
_RIDGE = 1e-10


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(a: Partition, b: Partition, normalization: str = "arithmetic") -> float:
    """Normalized mutual information between two partitions of the same points.

    Invariant to relabeling either side. Two constant partitions agree
    perfectly (1.0); a constant against a non-constant one shares no
    information (0.0).
    """
    if a.n_points != b.n_points:
        raise LengthMismatch(
            f"{a.n_points} vs {b.n_points} points"
        )
    if normalization not in NMI_NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    n = a.n_points
    contingency = np.zeros((a.k, b.k))
    np.add.at(contingency, (a.assignments, b.assignments), 1.0)
    row = contingency.sum(axis=1)
    col = contingency.sum(axis=0)
    h_a = _entropy(row)
    h_b = _entropy(col)
    if h_a == 0.0 and h_b == 0.0:
        return 1.0
    if h_a == 0.0 or h_b == 0.0:
        return 0.0
    nz = contingency > 0
    p_joint = contingency[nz] / n
    outer = np.outer(row, col)[nz] / (n * n)
    mi = float((p_joint * np.log(p_joint / outer)).sum())
    if normalization == "arithmetic":
        denom = 0.5 * (h_a + h_b)
    elif normalization == "geometric":
        denom = np.sqrt(h_a * h_b)
    else:
        denom = max(h_a, h_b)
    return float(np.clip(mi / denom, 0.0, 1.0))


def prob_true_k(selected_ks, true_k: int, confidence: float = 0.95) -> WilsonInterval:
    """Wilson interval for the probability that selection recovers true_k."""
    selected = list(selected_ks)
    if not selected:
        raise EmptyInput("no selections to score")
    hits = sum(1 for k in selected if int(k) == int(true_k))
    return wilson_interval(hits, len(selected), confidence)


def adjusted_r2(r2: float, n_samples: int, n_predictors: int) -> float:
    """R-squared penalized for model size: 1 - (1-R2)(n-1)/(n-p-1)."""
    n = int(n_samples)
    p = int(n_predictors)
    if n - p - 1 <= 0:
        raise DegenerateDof(f"n - p - 1 = {n - p - 1} must be positive")
    return float(1.0 - (1.0 - r2) * (n - 1) / (n - p - 1))


@dataclass(frozen=True)
class RegressionEvalConfig:
    """Repeated random-split protocol for the external-outcome score.

    encode_clusters=False drops the membership columns, which is how the
    no-clusters baseline runs on identical splits.
    """

    test_fraction: float = 0.3
    folds: int = 10
    seed: int = 0
    encode_clusters: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.folds < 1:
            raise ValueError("folds must be >= 1")


def _design(features: np.ndarray, assignments, k: int, encode: bool) -> np.ndarray:
    n = features.shape[0]
    columns = [np.ones((n, 1)), features]
    if encode and k > 1:
        onehot = np.zeros((n, k - 1))
        for cid in range(1, k):
            onehot[:, cid - 1] = assignments == cid
        columns.append(onehot)
    return np.hstack(columns)


def _ols_r2(design_train, y_train, design_test, y_test) -> float:
    # equilibrate columns so rank detection and the solve see a moderate
    # condition number regardless of raw feature scales
    scale = np.linalg.norm(design_train, axis=0)
    if np.any(scale == 0.0):
        raise RankDeficient("design matrix has an all-zero column")
    scaled_train = design_train / scale
    # detect genuine rank deficiency before the ridge papers over it
    if np.linalg.matrix_rank(scaled_train) < scaled_train.shape[1]:
        raise RankDeficient("design matrix has dependent columns")
    gram = scaled_train.T @ scaled_train
    beta = np.linalg.solve(
        gram + _RIDGE * np.eye(gram.shape[0]), scaled_train.T @ y_train
    )
    pred = (design_test / scale) @ beta
    resid = y_test - pred
    total = y_test - y_test.mean()
    denom = float(total @ total)
    if denom == 0.0:
        raise DegenerateDof("test target is constant")
    return 1.0 - float(resid @ resid) / denom


def external_regression_eval(
    features: Dataset,
    target,
    partition: Partition | None,
    config: RegressionEvalConfig = RegressionEvalConfig(),
):
    """Mean adjusted out-of-sample R-squared over repeated random splits.

    Each fold draws a seeded train/test split, fits ordinary least squares
    of the target on [intercept, features, k-1 cluster indicators] on the
    training rows, and scores adjusted R-squared on the held-out rows (n =
    test size, p = predictor count excluding the intercept). The split
    sequence depends only on config.seed, the point count, and the fold
    index, so runs with and without cluster columns see identical splits.

    Returns (mean, per_fold) where per_fold holds one value per fold and
    None for folds whose design was rank deficient.
    """
    y = np.asarray(target, dtype=np.float64).ravel()
    if y.shape[0] != features.n_points:
        raise LengthMismatch(
            f"{y.shape[0]} targets for {features.n_points} points"
        )
    encode = config.encode_clusters and partition is not None
    if partition is not None and partition.n_points != features.n_points:
        raise LengthMismatch("partition does not cover the feature rows")
    assignments = partition.assignments if partition is not None else None
    k = partition.k if partition is not None else 1

    n = features.n_points
    n_test = max(1, int(round(config.test_fraction * n)))
    if n_test >= n:
        raise DegenerateDof("test fraction leaves no training rows")
    x = features.values

    per_fold = []
    for fold in range(config.folds):
        rng = make_rng(config.seed + fold)
        order = rng.permutation(n)
        test_idx = order[:n_test]
        train_idx = order[n_test:]
        design_train = _design(
            x[train_idx],
            assignments[train_idx] if encode else None,
            k,
            encode,
        )
        design_test = _design(
            x[test_idx],
            assignments[test_idx] if encode else None,
            k,
            encode,
        )
        n_predictors = design_train.shape[1] - 1
        try:
            r2 = _ols_r2(design_train, y[train_idx], design_test, y[test_idx])
            per_fold.append(adjusted_r2(r2, n_test, n_predictors))
        except RankDeficient:
            per_fold.append(None)
    usable = [v for v in per_fold if v is not None]
    if not usable:
        raise RankDeficient("every fold was rank deficient")
    return float(np.mean(usable)), per_fold
