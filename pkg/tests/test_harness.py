"""Tests for the experiment grid runner and its record handling."""

import json

import numpy as np
import pytest

from infoguide import (
    ALGORITHMS,
    METRICS,
    DatasetSource,
    EmptyRecords,
    ExperimentConfig,
    ExperimentRecord,
    aggregate,
    count_retrieval_fits,
    read_records,
    run_experiment,
    write_records,
    write_summary_csv,
)


def tiny_sources():
    return (
        DatasetSource(name="b", n_points=24, n_features=2, k_star=2,
                      cluster_separation=6.0),
        DatasetSource(name="e", n_points=24, n_features=2, k_star=2,
                      cluster_separation=6.0),
    )


def tiny_config(tmp_path, **overrides):
    options = dict(
        datasets=tiny_sources(),
        algorithms=("kmeans", "ward"),
        trials=2,
        k_min=1,
        k_max=3,
        gap_references=2,
        seed=7,
        output_path=str(tmp_path / "records.jsonl"),
    )
    options.update(overrides)
    return ExperimentConfig(**options)


def strip_time(records):
    """Record dicts with the only non-deterministic field removed."""
    rows = []
    for record in records:
        row = record.to_dict()
        row.pop("wall_time_ms")
        rows.append(row)
    return rows


# --- config validation ---------------------------------------------------------


def test_config_rejects_bad_members(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(datasets=())
    with pytest.raises(ValueError):
        ExperimentConfig(datasets=tiny_sources(), algorithms=("spectral",))
    with pytest.raises(ValueError):
        ExperimentConfig(datasets=tiny_sources(), metrics=("bic",))
    with pytest.raises(ValueError):
        ExperimentConfig(datasets=tiny_sources(), trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(datasets=tiny_sources(), k_min=0)
    with pytest.raises(ValueError):
        ExperimentConfig(datasets=tiny_sources(), k_min=5, k_max=4)
    with pytest.raises(ValueError):
        ExperimentConfig(datasets=tiny_sources(), parallelism=0)


def test_dataset_source_validation():
    with pytest.raises(ValueError):
        DatasetSource(name="x", kind="stream")
    with pytest.raises(ValueError):
        DatasetSource(name="x", kind="csv")  # path and schema missing


def test_config_json_round_trip(tmp_path):
    csv_path = tmp_path / "ext.csv"
    csv_path.write_text("a,b,y\n1.0,2.0,0.5\n2.0,1.0,0.7\n3.0,0.0,0.9\n")
    config = tiny_config(
        tmp_path,
        datasets=tiny_sources() + (
            DatasetSource(
                name="ext",
                kind="csv",
                dataset_type="real_world",
                path=str(csv_path),
                schema=__import__("infoguide").CsvSchema(
                    feature_columns=("a", "b"), target_column="y"
                ),
            ),
        ),
    )
    path = tmp_path / "config.json"
    config.to_json(path)
    loaded = ExperimentConfig.from_json(path)
    assert loaded == config


def test_config_json_rejects_unknown_fields(tmp_path):
    path = tmp_path / "config.json"
    payload = {
        "datasets": [{"name": "b", "n_points": 24, "n_features": 2,
                      "k_star": 2}],
        "sweep_mode": "wide",
    }
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(path)
    payload = {"datasets": [{"name": "b", "colour": "red"}]}
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(path)


# --- the grid runner -------------------------------------------------------------


def test_run_produces_one_record_per_cell_and_metric(tmp_path):
    config = tiny_config(tmp_path)
    records = run_experiment(config)
    assert len(records) == 2 * 2 * 2 * len(METRICS)
    expected_cells = {
        (s.name, a, t)
        for s in config.datasets
        for a in config.algorithms
        for t in range(config.trials)
    }
    seen = {(r.dataset, r.algorithm, r.trial) for r in records}
    assert seen == expected_cells
    for record in records:
        assert record.error is None
        assert record.metric in METRICS
        assert 1 <= record.k_hat <= 3
        assert record.k_star == 2
        assert record.hit == (record.k_hat == 2)
        assert 0.0 <= record.nmi <= 1.0
        assert record.series_fits == 3
        assert record.r2_gain is None  # no external target in this grid


def test_records_are_canonically_sorted_and_persisted(tmp_path):
    config = tiny_config(tmp_path)
    records = run_experiment(config)
    on_disk = read_records(config.output_path)
    assert strip_time(on_disk) == strip_time(records)
    names = [s.name for s in config.datasets]
    keys = [
        (names.index(r.dataset), config.algorithms.index(r.algorithm),
         r.trial, METRICS.index(r.metric))
        for r in records
    ]
    assert keys == sorted(keys)


def test_rerun_is_value_identical_up_to_wall_time(tmp_path):
    config_a = tiny_config(tmp_path, output_path=str(tmp_path / "a.jsonl"))
    config_b = tiny_config(tmp_path, output_path=str(tmp_path / "b.jsonl"))
    first = run_experiment(config_a)
    second = run_experiment(config_b)
    assert strip_time(first) == strip_time(second)


def test_count_retrieval_fits_counts_each_cell_once(tmp_path):
    config = tiny_config(tmp_path)
    records = run_experiment(config)
    # 2 datasets x 2 algorithms x 2 trials x 3 fits per series.
    assert count_retrieval_fits(records) == 2 * 2 * 2 * 3


def test_resume_keeps_complete_cells_and_refits_the_rest(tmp_path):
    config = tiny_config(tmp_path)
    full = run_experiment(config)
    kept_cell = ("b", "kmeans", 0)
    dropped_cell = ("e", "ward", 1)
    partial_cell = ("b", "ward", 0)
    pruned = [
        r
        for r in full
        if (r.dataset, r.algorithm, r.trial) != dropped_cell
        and not (
            (r.dataset, r.algorithm, r.trial) == partial_cell
            and r.metric == "gap"
        )
    ]
    write_records(pruned, config.output_path)
    resumed = run_experiment(config, resume=True)
    assert strip_time(resumed) == strip_time(full)
    # The untouched complete cell must not have been recomputed: its
    # wall-clock values are byte-identical because the records were kept.
    kept_times = sorted(
        r.wall_time_ms for r in full
        if (r.dataset, r.algorithm, r.trial) == kept_cell
    )
    resumed_times = sorted(
        r.wall_time_ms for r in resumed
        if (r.dataset, r.algorithm, r.trial) == kept_cell
    )
    assert resumed_times == kept_times
    # The partially complete cell was rerun in full.
    partial_metrics = {
        r.metric for r in resumed
        if (r.dataset, r.algorithm, r.trial) == partial_cell
    }
    assert partial_metrics == set(METRICS)


def test_fresh_run_ignores_existing_records(tmp_path):
    config = tiny_config(tmp_path)
    first = run_experiment(config)
    bogus = [
        ExperimentRecord(dataset="b", dataset_type="benchmark",
                         algorithm="kmeans", trial=0, metric=m, k_hat=9)
        for m in METRICS
    ]
    write_records(bogus + [r for r in first if r.trial == 1], config.output_path)
    refreshed = run_experiment(config, resume=False)
    assert strip_time(refreshed) == strip_time(first)
    assert all(r.k_hat != 9 for r in refreshed)


def test_parallel_run_matches_serial(tmp_path):
    serial = run_experiment(
        tiny_config(tmp_path, output_path=str(tmp_path / "serial.jsonl"))
    )
    parallel = run_experiment(
        tiny_config(
            tmp_path, parallelism=2, output_path=str(tmp_path / "par.jsonl")
        )
    )
    assert strip_time(parallel) == strip_time(serial)


def test_regenerate_per_trial_controls_dataset_reuse(tmp_path):
    # Ward is deterministic: with one shared dataset every trial must give
    # identical scientific outcomes; with per-trial regeneration the noisy
    # low-separation data makes agreement scores differ across trials.
    base = dict(
        datasets=(
            DatasetSource(name="b", n_points=24, n_features=2, k_star=2,
                          cluster_separation=2.0),
        ),
        algorithms=("ward",),
        metrics=("silhouette",),
        trials=4,
        k_min=1,
        k_max=4,
        seed=11,
    )
    shared = run_experiment(ExperimentConfig(
        **base, output_path=str(tmp_path / "shared.jsonl")
    ))
    assert len({(r.k_hat, r.nmi) for r in shared}) == 1
    fresh = run_experiment(ExperimentConfig(
        **base, regenerate_per_trial=True,
        output_path=str(tmp_path / "fresh.jsonl"),
    ))
    assert len({(r.k_hat, r.nmi) for r in fresh}) > 1


def test_z_score_source_standardizes_features(tmp_path):
    csv_path = tmp_path / "scaled.csv"
    rng = np.random.default_rng(5)
    x = rng.normal(size=(40, 2)) * np.array([100.0, 0.01]) + np.array([50.0, -3.0])
    labels = (x[:, 0] > 50.0).astype(int)
    lines = ["a,b,label"]
    for row, lab in zip(x, labels):
        lines.append(f"{float(row[0])!r},{float(row[1])!r},{int(lab)}")
    csv_path.write_text("\n".join(lines) + "\n")
    from infoguide import CsvSchema, Dataset
    from infoguide.harness import _resolve_source

    source = DatasetSource(
        name="scaled", kind="csv", path=str(csv_path),
        schema=CsvSchema(feature_columns=("a", "b"), label_column="label"),
        z_score=True,
    )
    dataset, _ = _resolve_source(source, 0, -1)
    assert np.allclose(dataset.values.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(dataset.values.std(axis=0), 1.0, atol=1e-12)


def test_errors_become_records_not_crashes(tmp_path):
    # A constant external target makes the regression stage degenerate for
    # every metric; the run must finish and carry typed error records.
    csv_path = tmp_path / "flat.csv"
    rng = np.random.default_rng(6)
    lines = ["a,b,y"]
    for row in rng.normal(size=(30, 2)):
        lines.append(f"{float(row[0])!r},{float(row[1])!r},1.0")
    csv_path.write_text("\n".join(lines) + "\n")
    from infoguide import CsvSchema

    config = ExperimentConfig(
        datasets=(
            DatasetSource(
                name="flat", kind="csv", dataset_type="real_world",
                path=str(csv_path),
                schema=CsvSchema(feature_columns=("a", "b"), target_column="y"),
            ),
        ),
        algorithms=("kmeans",),
        trials=1,
        k_min=1,
        k_max=3,
        gap_references=2,
        output_path=str(tmp_path / "flat.jsonl"),
    )
    records = run_experiment(config)
    assert len(records) == len(METRICS)
    for record in records:
        assert record.error == "DegenerateDof"
        assert record.error_operation == record.metric
        assert record.k_hat is None


# --- records and aggregation -----------------------------------------------------


def test_records_round_trip_through_jsonl(tmp_path):
    records = [
        ExperimentRecord(dataset="b", dataset_type="benchmark",
                         algorithm="kmeans", trial=0, metric="infoguide",
                         k_hat=3, k_star=3, hit=True, nmi=0.91,
                         series_fits=11, wall_time_ms=4.2, seed=123),
        ExperimentRecord(dataset="x", dataset_type="real_world",
                         algorithm="gmm", trial=1, metric="gap",
                         error="SingularCovariance",
                         error_operation="fit_series"),
    ]
    path = tmp_path / "records.jsonl"
    write_records(records, path)
    assert read_records(path) == records


def hand_records():
    rows = []
    for trial in range(5):
        rows.append(ExperimentRecord(
            dataset="b", dataset_type="benchmark", algorithm="kmeans",
            trial=trial, metric="infoguide", k_hat=3 if trial < 4 else 2,
            k_star=3, hit=trial < 4, nmi=0.9 + 0.01 * trial,
        ))
    rows.append(ExperimentRecord(
        dataset="b", dataset_type="benchmark", algorithm="kmeans",
        trial=5, metric="infoguide", error="EmptySample",
        error_operation="infoguide",
    ))
    for trial in range(3):
        rows.append(ExperimentRecord(
            dataset="acs", dataset_type="real_world", algorithm="kmeans",
            trial=trial, metric="infoguide", k_hat=7,
            r2_with_clusters=0.41, r2_without_clusters=0.37,
            r2_gain=0.04 + 0.01 * trial,
        ))
    return rows


def test_aggregate_summarizes_by_group():
    rows = aggregate(hand_records(), group_by=("dataset", "metric"))
    assert len(rows) == 2
    by_dataset = {row["dataset"]: row for row in rows}
    bench = by_dataset["b"]
    assert bench["n"] == 6
    assert bench["n_errors"] == 1
    assert bench["recovery_point"] == pytest.approx(
        __import__("infoguide").wilson_interval(4, 5).point
    )
    assert bench["nmi_mean"] == pytest.approx(np.mean([0.9, 0.91, 0.92, 0.93, 0.94]))
    assert bench["nmi_sd"] == pytest.approx(np.std([0.9, 0.91, 0.92, 0.93, 0.94], ddof=1))
    assert "r2_gain_mean" not in bench
    real = by_dataset["acs"]
    assert real["n_errors"] == 0
    assert "recovery_point" not in real
    assert real["r2_gain_mean"] == pytest.approx(0.05)
    assert real["k_hat_mean"] == 7.0


def test_aggregate_validates_inputs():
    with pytest.raises(EmptyRecords):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate(hand_records(), group_by=("seed",))


def test_write_summary_csv_emits_header_and_rows(tmp_path):
    rows = aggregate(hand_records(), group_by=("dataset",))
    path = tmp_path / "summary.csv"
    write_summary_csv(rows, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 3
    header = lines[0].split(",")
    assert header[0] == "dataset"
    assert "recovery_point" in header
    with pytest.raises(EmptyRecords):
        write_summary_csv([], tmp_path / "empty.csv")
