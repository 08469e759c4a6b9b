"""Experiment harness: the dataset x algorithm x trial grid, with resume.

One cell of the grid fits a full retrieval series (every k in
[k_min, k_max]) once and scores each configured selection metric on that
shared series. Records stream to a JSONL file as cells finish and the file
is rewritten in canonical order at the end, so a completed run is
byte-stable. Every random draw goes through seeds derived from
(config.seed, dataset, algorithm, trial, role); worker count and scheduling
order cannot change any recorded value.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import fixtures
from .algorithms import ALGORITHMS, AlgorithmConfig, fit_series
from .baselines import (
    calinski_harabasz,
    gap_statistic,
    select_k_argmax,
    select_k_gap,
    silhouette,
)
from .core import Dataset, derive_seed
from .datagen import ArtificialSpec, CsvSchema, generate_artificial, load_csv, schema_from_json
from .errors import EmptyRecords, InfoGuideError, SchemaMismatch
from .evaluation import RegressionEvalConfig, external_regression_eval, nmi
from .selection import select_k_infoguide
from .stats import wilson_interval

METRICS = ("infoguide", "silhouette", "calinski_harabasz", "gap")

GROUP_FIELDS = ("dataset", "dataset_type", "algorithm", "metric")


@dataclass(frozen=True)
class DatasetSource:
    """Where one grid dataset comes from.

    kind is "artificial" (blob recipe), "fixture" (bundled table), or "csv"
    (external file + schema). z_score standardizes every feature column
    before clustering and equivalence testing.
    """

    name: str
    kind: str = "artificial"
    dataset_type: str = "benchmark"
    n_points: int = 1000
    n_features: int = 10
    k_star: int | None = None
    cluster_separation: float = 4.0
    path: str | None = None
    schema: CsvSchema | None = None
    z_score: bool = False

    def __post_init__(self):
        if self.kind not in ("artificial", "fixture", "csv"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "csv" and (self.path is None or self.schema is None):
            raise ValueError("csv sources need path and schema")

    @staticmethod
    def from_dict(raw: dict) -> "DatasetSource":
        raw = dict(raw)
        schema = raw.pop("schema", None)
        schema_path = raw.pop("schema_path", None)
        if schema is not None:
            schema = CsvSchema(
                feature_columns=tuple(schema["feature_columns"]),
                label_column=schema.get("label_column"),
                target_column=schema.get("target_column"),
                delimiter=schema.get("delimiter", ","),
                has_header=schema.get("has_header", True),
            )
        elif schema_path is not None:
            schema = schema_from_json(schema_path)
        known = {f.name for f in DatasetSource.__dataclass_fields__.values()}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown dataset source fields {sorted(unknown)}")
        return DatasetSource(schema=schema, **raw)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full grid description; serializable to/from JSON."""

    datasets: tuple
    algorithms: tuple = ALGORITHMS
    metrics: tuple = METRICS
    trials: int = 30
    k_min: int = 1
    k_max: int = 11
    alpha: float = 0.05
    direction: str = "both"
    gap_references: int = 10
    seed: int = 0
    parallelism: int = 1
    regenerate_per_trial: bool = False
    test_fraction: float = 0.3
    folds: int = 10
    max_iterations: int = 300
    convergence_tolerance: float = 1e-6
    restarts: int = 1
    covariance_regularization: float = 1e-6
    output_path: str = "records.jsonl"

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if not self.datasets:
            raise ValueError("config needs at least one dataset")
        for algorithm in self.algorithms:
            if algorithm not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {algorithm!r}")
        for metric in self.metrics:
            if metric not in METRICS:
                raise ValueError(f"unknown metric {metric!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.k_min < 1 or self.k_max < self.k_min:
            raise ValueError(f"invalid k range [{self.k_min}, {self.k_max}]")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        datasets = tuple(DatasetSource.from_dict(d) for d in raw.pop("datasets"))
        known = {f.name for f in ExperimentConfig.__dataclass_fields__.values()}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        return ExperimentConfig(
            datasets=datasets,
            **{k: tuple(v) if k in ("algorithms", "metrics") else v for k, v in raw.items()},
        )

    def to_json(self, path) -> None:
        payload = asdict(self)
        payload["datasets"] = [
            {k: v for k, v in d.items() if v is not None}
            for d in payload["datasets"]
        ]
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")


RECORD_FIELDS = (
    "dataset",
    "dataset_type",
    "algorithm",
    "trial",
    "metric",
    "k_hat",
    "k_star",
    "hit",
    "nmi",
    "r2_with_clusters",
    "r2_without_clusters",
    "r2_gain",
    "series_fits",
    "wall_time_ms",
    "seed",
    "error",
    "error_operation",
)


@dataclass(frozen=True)
class ExperimentRecord:
    """One (dataset, algorithm, trial, metric) outcome, or its failure."""

    dataset: str
    dataset_type: str
    algorithm: str
    trial: int
    metric: str
    k_hat: int | None = None
    k_star: int | None = None
    hit: bool | None = None
    nmi: float | None = None
    r2_with_clusters: float | None = None
    r2_without_clusters: float | None = None
    r2_gain: float | None = None
    series_fits: int = 0
    wall_time_ms: float = 0.0
    seed: int = 0
    error: str | None = None
    error_operation: str | None = None

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in RECORD_FIELDS}

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentRecord":
        return ExperimentRecord(**{name: raw.get(name) for name in RECORD_FIELDS})


def write_records(records, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict(), sort_keys=True))
            handle.write("\n")


def read_records(path) -> list:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(ExperimentRecord.from_dict(json.loads(line)))
    return records


# --- dataset resolution (cached per process) ---------------------------------


@lru_cache(maxsize=64)
def _resolve_source(source: DatasetSource, config_seed: int, trial_key: int):
    """(Dataset, target) for one source; trial_key varies only when the
    config regenerates artificial data per trial."""
    if source.kind == "artificial":
        spec = ArtificialSpec(
            name=source.name,
            n_points=source.n_points,
            n_features=source.n_features,
            k_star=source.k_star,
            cluster_separation=source.cluster_separation,
            seed=derive_seed(config_seed, "data", source.name, trial_key),
        )
        dataset, target = generate_artificial(spec), None
    elif source.kind == "fixture":
        dataset, target = fixtures.load_fixture(source.name)
    else:
        dataset, target = load_csv(source.path, source.schema, name=source.name)
    if source.z_score:
        values = dataset.values
        sd = values.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        dataset = Dataset(
            (values - values.mean(axis=0)) / sd,
            dataset.feature_names,
            labels=dataset.labels,
            name=dataset.name,
        )
    return dataset, target


def _trial_key(config: ExperimentConfig, trial: int) -> int:
    return trial if config.regenerate_per_trial else -1


@lru_cache(maxsize=64)
def _ward_series_cached(source: DatasetSource, config_seed: int, trial_key: int,
                        k_min: int, k_max: int):
    dataset, _ = _resolve_source(source, config_seed, trial_key)
    return fit_series("ward", dataset, k_min, k_max, AlgorithmConfig())


@lru_cache(maxsize=64)
def _baseline_r2_cached(source: DatasetSource, config_seed: int, trial_key: int,
                        test_fraction: float, folds: int):
    dataset, target = _resolve_source(source, config_seed, trial_key)
    if target is None:
        return None
    reg_config = RegressionEvalConfig(
        test_fraction=test_fraction,
        folds=folds,
        seed=derive_seed(config_seed, "regression", source.name, trial_key),
        encode_clusters=False,
    )
    mean, _ = external_regression_eval(dataset, target, None, reg_config)
    return mean


def _algorithm_config(config: ExperimentConfig, seed: int) -> AlgorithmConfig:
    return AlgorithmConfig(
        max_iterations=config.max_iterations,
        convergence_tolerance=config.convergence_tolerance,
        restarts=config.restarts,
        seed=seed,
        covariance_regularization=config.covariance_regularization,
    )


def _select_k(metric: str, dataset, series, algorithm: str, cell_seed: int,
              config: ExperimentConfig) -> int:
    if metric == "infoguide":
        result = select_k_infoguide(
            dataset, series, alpha=config.alpha, direction=config.direction
        )
        return result.k_hat
    if metric in ("silhouette", "calinski_harabasz"):
        index = silhouette if metric == "silhouette" else calinski_harabasz
        scores = []
        for k in range(max(2, config.k_min), config.k_max + 1):
            try:
                scores.append(index(dataset, series.partition_for(k)))
            except InfoGuideError:
                continue
        return select_k_argmax(scores)
    if metric == "gap":
        profile = gap_statistic(
            dataset,
            algorithm,
            (config.k_min, config.k_max),
            reference_count=config.gap_references,
            config=_algorithm_config(config, derive_seed(cell_seed, "gap")),
        )
        return select_k_gap(profile)
    raise ValueError(f"unknown metric {metric!r}")


def run_cell(source: DatasetSource, algorithm: str, trial: int,
             config: ExperimentConfig) -> list:
    """All records of one grid cell; exceptions become error records."""
    trial_key = _trial_key(config, trial)
    dataset, target = _resolve_source(source, config.seed, trial_key)
    cell_seed = derive_seed(config.seed, source.name, algorithm, trial)
    base = dict(
        dataset=source.name,
        dataset_type=source.dataset_type,
        algorithm=algorithm,
        trial=trial,
        seed=cell_seed,
    )
    try:
        if algorithm == "ward":
            series = _ward_series_cached(
                source, config.seed, trial_key, config.k_min, config.k_max
            )
        else:
            series = fit_series(
                algorithm, dataset, config.k_min, config.k_max,
                _algorithm_config(config, cell_seed),
            )
    except InfoGuideError as exc:
        return [
            ExperimentRecord(
                **base, metric=metric, error=type(exc).__name__,
                error_operation="fit_series",
            )
            for metric in config.metrics
        ]
    series_fits = config.k_max - config.k_min + 1

    records = []
    for metric in config.metrics:
        started = time.perf_counter()
        try:
            k_hat = _select_k(metric, dataset, series, algorithm, cell_seed, config)
            chosen = series.partition_for(k_hat)
            outcome = {}
            if dataset.labels is not None:
                truth = dataset.label_partition()
                outcome["k_star"] = dataset.k_star
                outcome["hit"] = bool(k_hat == dataset.k_star)
                outcome["nmi"] = nmi(truth, chosen)
            if target is not None:
                baseline = _baseline_r2_cached(
                    source, config.seed, trial_key, config.test_fraction, config.folds
                )
                reg_config = RegressionEvalConfig(
                    test_fraction=config.test_fraction,
                    folds=config.folds,
                    seed=derive_seed(config.seed, "regression", source.name, trial_key),
                )
                with_clusters, _ = external_regression_eval(
                    dataset, target, chosen, reg_config
                )
                outcome["r2_with_clusters"] = with_clusters
                outcome["r2_without_clusters"] = baseline
                outcome["r2_gain"] = with_clusters - baseline
            elapsed = (time.perf_counter() - started) * 1000.0
            records.append(
                ExperimentRecord(
                    **base, metric=metric, k_hat=int(k_hat),
                    series_fits=series_fits, wall_time_ms=elapsed, **outcome,
                )
            )
        except InfoGuideError as exc:
            elapsed = (time.perf_counter() - started) * 1000.0
            records.append(
                ExperimentRecord(
                    **base, metric=metric, series_fits=series_fits,
                    wall_time_ms=elapsed, error=type(exc).__name__,
                    error_operation=metric,
                )
            )
    return records


def _cell_key(record: ExperimentRecord) -> tuple:
    return (record.dataset, record.algorithm, record.trial)


def _canonical_sort(records: list, config: ExperimentConfig) -> list:
    dataset_order = {s.name: i for i, s in enumerate(config.datasets)}
    algorithm_order = {a: i for i, a in enumerate(config.algorithms)}
    metric_order = {m: i for i, m in enumerate(config.metrics)}
    return sorted(
        records,
        key=lambda r: (
            dataset_order.get(r.dataset, len(dataset_order)),
            algorithm_order.get(r.algorithm, len(algorithm_order)),
            r.trial,
            metric_order.get(r.metric, len(metric_order)),
        ),
    )


def run_experiment(config: ExperimentConfig, resume: bool = True) -> list:
    """Run the grid, streaming records to config.output_path.

    With resume=True an existing output file keeps every complete cell (all
    configured metrics present for its dataset/algorithm/trial) and only the
    missing cells run. The file ends up canonically sorted either way.
    """
    path = Path(config.output_path)
    kept = []
    done = set()
    if resume and path.exists():
        metric_set = set(config.metrics)
        by_cell: dict = {}
        for record in read_records(path):
            by_cell.setdefault(_cell_key(record), []).append(record)
        for key, cell_records in by_cell.items():
            if {r.metric for r in cell_records} >= metric_set:
                kept.extend(cell_records)
                done.add(key)

    pending = [
        (source, algorithm, trial)
        for source in config.datasets
        for algorithm in config.algorithms
        for trial in range(config.trials)
        if (source.name, algorithm, trial) not in done
    ]

    path.parent.mkdir(parents=True, exist_ok=True)
    records = list(kept)
    with open(path, "w", encoding="utf-8") as handle:
        for record in kept:
            handle.write(json.dumps(record.to_dict(), sort_keys=True))
            handle.write("\n")
        handle.flush()
        if config.parallelism == 1:
            produced = (run_cell(s, a, t, config) for s, a, t in pending)
            for cell_records in produced:
                records.extend(cell_records)
                for record in cell_records:
                    handle.write(json.dumps(record.to_dict(), sort_keys=True))
                    handle.write("\n")
                handle.flush()
        else:
            with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
                futures = [
                    pool.submit(run_cell, s, a, t, config) for s, a, t in pending
                ]
                for future in futures:
                    cell_records = future.result()
                    records.extend(cell_records)
                    for record in cell_records:
                        handle.write(json.dumps(record.to_dict(), sort_keys=True))
                        handle.write("\n")
                    handle.flush()

    records = _canonical_sort(records, config)
    write_records(records, path)
    return records


def count_retrieval_fits(records) -> int:
    """Total retrieval-series fits across distinct grid cells."""
    per_cell: dict = {}
    for record in records:
        key = _cell_key(record)
        per_cell[key] = max(per_cell.get(key, 0), record.series_fits)
    return sum(per_cell.values())


def aggregate(records, group_by=("dataset", "algorithm", "metric")) -> list:
    """Summary rows over record groups.

    Per group: record count, error count, exact-recovery Wilson interval
    (labeled records), mean/sd of NMI and of the regression gain. Standard
    deviations are sample sd, reported as 0.0 when the group has a single
    value (the n column flags that case).
    """
    group_by = tuple(group_by)
    for fieldname in group_by:
        if fieldname not in GROUP_FIELDS:
            raise ValueError(f"cannot group by {fieldname!r}")
    records = list(records)
    if not records:
        raise EmptyRecords("no records to aggregate")

    def sd(values):
        if len(values) < 2:
            return 0.0
        return float(np.std(values, ddof=1))

    groups: dict = {}
    for record in records:
        key = tuple(getattr(record, fieldname) for fieldname in group_by)
        groups.setdefault(key, []).append(record)

    rows = []
    for key in sorted(groups):
        members = groups[key]
        ok = [r for r in members if r.error is None]
        row = dict(zip(group_by, key))
        row["n"] = len(members)
        row["n_errors"] = len(members) - len(ok)
        scored = [r for r in ok if r.hit is not None]
        if scored:
            hits = sum(1 for r in scored if r.hit)
            interval = wilson_interval(hits, len(scored))
            row["recovery_point"] = interval.point
            row["recovery_lower"] = interval.lower
            row["recovery_upper"] = interval.upper
        nmis = [r.nmi for r in ok if r.nmi is not None]
        if nmis:
            row["nmi_mean"] = float(np.mean(nmis))
            row["nmi_sd"] = sd(nmis)
        gains = [r.r2_gain for r in ok if r.r2_gain is not None]
        if gains:
            row["r2_gain_mean"] = float(np.mean(gains))
            row["r2_gain_sd"] = sd(gains)
        k_hats = [r.k_hat for r in ok if r.k_hat is not None]
        if k_hats:
            row["k_hat_mean"] = float(np.mean(k_hats))
        rows.append(row)
    return rows


def write_summary_csv(rows, path) -> None:
    """Delimited summary with the union of row columns, groups first."""
    import csv as _csv

    if not rows:
        raise EmptyRecords("no summary rows to write")
    columns: list = []
    for row in rows:
        for column in row:
            if column not in columns:
                columns.append(column)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = _csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
