"""Tests for agreement scoring and the external regression evaluation."""

import numpy as np
import pytest

from infoguide import (
    Dataset,
    DegenerateDof,
    EmptyInput,
    LengthMismatch,
    Partition,
    RankDeficient,
    RegressionEvalConfig,
    adjusted_r2,
    external_regression_eval,
    make_rng,
    nmi,
    prob_true_k,
    wilson_interval,
)


def named(values):
    values = np.asarray(values, dtype=np.float64)
    cols = tuple(f"f{j}" for j in range(values.shape[1]))
    return Dataset(values, cols)


# --- NMI -----------------------------------------------------------------------


def test_nmi_is_one_for_identical_partitions():
    part = Partition([0, 1, 2, 0, 1, 2], k=3)
    assert nmi(part, part) == 1.0


def test_nmi_is_relabel_invariant():
    rng = make_rng(1)
    a = Partition(rng.integers(0, 3, size=60), k=3)
    b = Partition(rng.integers(0, 4, size=60), k=4)
    base = nmi(a, b)
    assert nmi(a.relabeled([2, 0, 1]), b) == pytest.approx(base, abs=1e-12)
    assert nmi(a, b.relabeled([3, 2, 1, 0])) == pytest.approx(base, abs=1e-12)
    assert nmi(b, a) == pytest.approx(base, abs=1e-12)


def test_nmi_of_independent_labelings_is_near_zero():
    rng = make_rng(2)
    a = Partition(rng.integers(0, 2, size=5000), k=2)
    b = Partition(rng.integers(0, 2, size=5000), k=2)
    assert nmi(a, b) < 0.01


def test_nmi_hand_computed_contingency():
    # Partitions [0,0,1,1] and [0,1,0,1]: joint table is uniform,
    # MI = 0, so NMI = 0 despite both marginals having full entropy.
    a = Partition([0, 0, 1, 1], k=2)
    b = Partition([0, 1, 0, 1], k=2)
    assert nmi(a, b) == pytest.approx(0.0, abs=1e-12)
    # Partitions [0,0,1,1] vs [0,0,1,2]: H(A) = 1 bit, H(B) = 1.5 bits,
    # MI = H(A) = 1 bit. Arithmetic normalization: 1 / 1.25 = 0.8.
    c = Partition([0, 0, 1, 2], k=3)
    assert nmi(a, c) == pytest.approx(0.8, abs=1e-12)
    assert nmi(a, c, normalization="geometric") == pytest.approx(
        1.0 / np.sqrt(1.5), abs=1e-12
    )
    assert nmi(a, c, normalization="max") == pytest.approx(
        1.0 / 1.5, abs=1e-12
    )


def test_nmi_constant_partition_edges():
    const = Partition([0, 0, 0, 0], k=1)
    other = Partition([0, 1, 0, 1], k=2)
    # Two constant labelings agree perfectly.
    assert nmi(const, const) == 1.0
    # A constant labeling shares no information with a varying one.
    assert nmi(const, other) == 0.0
    assert nmi(other, const) == 0.0


def test_nmi_validates_inputs():
    a = Partition([0, 1], k=2)
    b = Partition([0, 1, 0], k=2)
    with pytest.raises(LengthMismatch):
        nmi(a, b)
    with pytest.raises(ValueError):
        nmi(a, Partition([0, 1], k=2), normalization="harmonic")


def test_nmi_stays_in_unit_interval():
    rng = make_rng(3)
    for trial in range(50):
        n = int(rng.integers(5, 40))
        ka = int(rng.integers(1, 5))
        kb = int(rng.integers(1, 5))
        a_raw = np.concatenate([np.arange(ka), rng.integers(0, ka, size=n - ka)])
        b_raw = np.concatenate([np.arange(kb), rng.integers(0, kb, size=n - kb)])
        value = nmi(Partition(a_raw, k=ka), Partition(b_raw, k=kb))
        assert 0.0 <= value <= 1.0


# --- recovery probability --------------------------------------------------------


def test_prob_true_k_counts_hits_and_delegates_to_wilson():
    interval = prob_true_k([3, 3, 2, 3, 4, 3], true_k=3)
    reference = wilson_interval(4, 6, confidence=0.95)
    assert interval == reference


def test_prob_true_k_rejects_empty_input():
    with pytest.raises(EmptyInput):
        prob_true_k([], true_k=3)


# --- adjusted R-squared -----------------------------------------------------------


def test_adjusted_r2_formula_and_dof_guard():
    assert adjusted_r2(0.5, 30, 4) == pytest.approx(
        1.0 - 0.5 * 29 / 25, abs=1e-12
    )
    assert adjusted_r2(1.0, 10, 3) == 1.0
    with pytest.raises(DegenerateDof):
        adjusted_r2(0.5, 5, 4)
    with pytest.raises(DegenerateDof):
        adjusted_r2(0.5, 4, 4)


# --- external regression evaluation ------------------------------------------------


def planted_dataset(seed=0, n=300, f=4, k=3, offset=4.0):
    rng = make_rng(seed)
    x = rng.normal(size=(n, f))
    assignments = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    rng.shuffle(assignments)
    offsets = offset * np.arange(k)
    y = x @ rng.normal(size=f) + offsets[assignments] + rng.normal(size=n)
    return named(x), y, Partition(assignments, k=k)


def test_cluster_membership_lifts_out_of_sample_r2():
    ds, y, part = planted_dataset(seed=4)
    with_clusters, _ = external_regression_eval(ds, y, part)
    without, _ = external_regression_eval(
        ds, y, None, RegressionEvalConfig(encode_clusters=False)
    )
    assert with_clusters > without + 0.05


def test_random_membership_adds_nothing():
    ds, y, part = planted_dataset(seed=5)
    rng = make_rng(6)
    k = 10
    scrambled = Partition(
        np.concatenate([np.arange(k), rng.integers(0, k, size=ds.n_points - k)]),
        k=k,
    )
    without, _ = external_regression_eval(
        ds, y, None, RegressionEvalConfig(encode_clusters=False)
    )
    with_random, _ = external_regression_eval(ds, y, scrambled)
    assert with_random <= without + 0.01


def test_splits_are_identical_with_and_without_clusters():
    # The baseline run must see the same folds: scoring the true partition
    # with encode_clusters=False reproduces the no-partition baseline
    # exactly, fold by fold.
    ds, y, part = planted_dataset(seed=7)
    config = RegressionEvalConfig(encode_clusters=False)
    mean_a, folds_a = external_regression_eval(ds, y, part, config)
    mean_b, folds_b = external_regression_eval(ds, y, None, config)
    assert folds_a == folds_b
    assert mean_a == mean_b


def test_fold_values_are_deterministic_given_seed():
    ds, y, part = planted_dataset(seed=8)
    first = external_regression_eval(ds, y, part)
    second = external_regression_eval(ds, y, part)
    assert first == second
    shifted = external_regression_eval(
        ds, y, part, RegressionEvalConfig(seed=99)
    )
    assert shifted != first


def test_duplicate_feature_columns_mark_folds_rank_deficient():
    rng = make_rng(9)
    base = rng.normal(size=(40, 1))
    values = np.hstack([base, base])  # exactly dependent columns
    ds = named(values)
    y = rng.normal(size=40)
    with pytest.raises(RankDeficient):
        external_regression_eval(ds, y, None,
                                 RegressionEvalConfig(encode_clusters=False))


def test_constant_test_target_raises_degenerate_dof():
    rng = make_rng(10)
    ds = named(rng.normal(size=(30, 2)))
    y = np.ones(30)
    with pytest.raises(DegenerateDof):
        external_regression_eval(ds, y, None,
                                 RegressionEvalConfig(encode_clusters=False))


def test_too_many_predictors_for_test_size_raises():
    rng = make_rng(11)
    ds = named(rng.normal(size=(20, 10)))
    y = rng.normal(size=20)
    # test size 6, predictors 10 -> adjusted R2 dof is negative
    with pytest.raises(DegenerateDof):
        external_regression_eval(ds, y, None,
                                 RegressionEvalConfig(encode_clusters=False))


def test_target_length_must_match():
    rng = make_rng(12)
    ds = named(rng.normal(size=(25, 2)))
    with pytest.raises(LengthMismatch):
        external_regression_eval(ds, rng.normal(size=24), None)


def test_perfect_linear_target_scores_near_one():
    rng = make_rng(13)
    x = rng.normal(size=(100, 3))
    y = x @ np.array([1.0, -2.0, 0.5]) + 3.0
    mean, per_fold = external_regression_eval(
        named(x), y, None, RegressionEvalConfig(encode_clusters=False)
    )
    assert mean == pytest.approx(1.0, abs=1e-6)
    assert len(per_fold) == 10
    assert all(v is not None for v in per_fold)
