"""Dataset generation and delimited-file I/O.

Artificial datasets are isotropic Gaussian blobs with centroids kept at
least `cluster_separation` apart, matching the labeled benchmarks the
selection experiments run on. CSV loading goes through an explicit schema
so the harness never guesses column roles.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, derive_seed, make_rng
from .errors import ParseError, SchemaMismatch, SeparationInfeasible

# Default cluster counts for the named artificial benchmarks.
ARTIFICIAL_K_STAR = {"b": 3, "c": 4, "d": 4, "e": 2}

_CENTROID_ATTEMPTS = 10000


@dataclass(frozen=True)
class ArtificialSpec:
    """Recipe for one labeled blob dataset.

    name may be one of the built-in benchmark ids (which carry a default
    k_star) or anything else with k_star given explicitly.
    """

    name: str = "b"
    n_points: int = 1000
    n_features: int = 10
    k_star: int | None = None
    cluster_separation: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.k_star is None:
            if self.name not in ARTIFICIAL_K_STAR:
                raise ValueError(
                    f"no default k_star for {self.name!r}; pass one explicitly"
                )
            object.__setattr__(self, "k_star", ARTIFICIAL_K_STAR[self.name])
        if self.k_star < 1:
            raise ValueError("k_star must be >= 1")
        if self.n_points < self.k_star:
            raise ValueError("need at least one point per cluster")
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        if self.cluster_separation < 0:
            raise ValueError("cluster_separation must be >= 0")


def _draw_centroids(spec: ArtificialSpec, rng: np.random.Generator) -> np.ndarray:
    """Centroids from N(0, separation^2 I), redrawn until pairwise distances
    reach the separation floor."""
    k, f, sep = spec.k_star, spec.n_features, spec.cluster_separation
    scale = max(sep, 1.0)
    for _ in range(_CENTROID_ATTEMPTS):
        centroids = rng.normal(0.0, scale, size=(k, f))
        if k == 1:
            return centroids
        diff = centroids[:, None, :] - centroids[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        dist[np.diag_indices(k)] = np.inf
        if dist.min() >= sep:
            return centroids
    raise SeparationInfeasible(
        f"could not place {k} centroids {sep} apart in {f} dimensions"
    )


def generate_artificial(spec: ArtificialSpec) -> Dataset:
    """Sample one labeled dataset: unit-variance blobs of near-equal size."""
    rng = make_rng(derive_seed(spec.seed, "artificial", spec.name))
    centroids = _draw_centroids(spec, rng)
    k = spec.k_star
    sizes = np.full(k, spec.n_points // k, dtype=np.int64)
    sizes[: spec.n_points % k] += 1
    labels = np.repeat(np.arange(k), sizes)
    values = centroids[labels] + rng.normal(0.0, 1.0, size=(spec.n_points, spec.n_features))
    order = rng.permutation(spec.n_points)
    feature_names = tuple(f"f{i}" for i in range(spec.n_features))
    return Dataset(values[order], feature_names, labels=labels[order], name=spec.name)


@dataclass(frozen=True)
class CsvSchema:
    """Column roles for a delimited file.

    With has_header=False, columns are referenced by zero-based index
    (integers or digit strings) instead of names.
    """

    feature_columns: tuple
    label_column: str | None = None
    target_column: str | None = None
    delimiter: str = ","
    has_header: bool = True

    def __post_init__(self):
        object.__setattr__(
            self, "feature_columns", tuple(str(c) for c in self.feature_columns)
        )
        if not self.feature_columns:
            raise SchemaMismatch("schema declares no feature columns")


def schema_from_json(path) -> CsvSchema:
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    return CsvSchema(
        feature_columns=tuple(raw["feature_columns"]),
        label_column=raw.get("label_column"),
        target_column=raw.get("target_column"),
        delimiter=raw.get("delimiter", ","),
        has_header=raw.get("has_header", True),
    )


def _column_index(header: list, name) -> int:
    # int column references address headerless files, whose synthesized
    # header is the stringified positions
    name = str(name)
    if name in header:
        return header.index(name)
    raise SchemaMismatch(f"column {name!r} not in file columns {header}")


def _map_labels(raw_labels: list) -> np.ndarray:
    """Contiguous ids from raw label cells.

    Labels that already form a contiguous 0..k-1 integer set are kept
    as-is; anything else (strings, gaps) is mapped by first appearance.
    """
    try:
        as_int = [int(v) for v in raw_labels]
    except ValueError:
        as_int = None
    if as_int is not None:
        unique = sorted(set(as_int))
        if unique[0] == 0 and unique == list(range(len(unique))):
            return np.asarray(as_int, dtype=np.int64)
    seen: dict = {}
    ids = np.empty(len(raw_labels), dtype=np.int64)
    for pos, value in enumerate(raw_labels):
        if value not in seen:
            seen[value] = len(seen)
        ids[pos] = seen[value]
    return ids


def load_csv(path, schema: CsvSchema, name: str | None = None):
    """Load a delimited file under a schema.

    Returns (Dataset, target) where target is a float array when the schema
    names a target column and None otherwise. Raises SchemaMismatch for
    missing columns, ragged rows, or a file without data rows, and
    ParseError (with zero-based data row index and column name) for cells
    that do not parse as numbers.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle, delimiter=schema.delimiter)
        rows = [row for row in reader if row]
    if schema.has_header:
        if not rows:
            raise SchemaMismatch(f"{path} is empty")
        header = [cell.strip() for cell in rows[0]]
        data_rows = rows[1:]
    else:
        if not rows:
            raise SchemaMismatch(f"{path} is empty")
        header = [str(i) for i in range(len(rows[0]))]
        data_rows = rows
    if not data_rows:
        raise SchemaMismatch(f"{path} has no data rows")

    feature_idx = [_column_index(header, c) for c in schema.feature_columns]
    label_idx = (
        _column_index(header, schema.label_column)
        if schema.label_column is not None
        else None
    )
    target_idx = (
        _column_index(header, schema.target_column)
        if schema.target_column is not None
        else None
    )

    width = len(header)
    values = np.empty((len(data_rows), len(feature_idx)))
    raw_labels = []
    target = np.empty(len(data_rows)) if target_idx is not None else None
    for r, row in enumerate(data_rows):
        if len(row) != width:
            raise SchemaMismatch(
                f"row {r} has {len(row)} cells, header has {width}"
            )
        for pos, idx in enumerate(feature_idx):
            cell = row[idx].strip()
            try:
                values[r, pos] = float(cell)
            except ValueError:
                raise ParseError(r, header[idx], f"non-numeric cell {cell!r}") from None
        if label_idx is not None:
            raw_labels.append(row[label_idx].strip())
        if target_idx is not None:
            cell = row[target_idx].strip()
            try:
                target[r] = float(cell)
            except ValueError:
                raise ParseError(r, header[target_idx], f"non-numeric cell {cell!r}") from None

    labels = _map_labels(raw_labels) if label_idx is not None else None
    dataset = Dataset(
        values,
        tuple(schema.feature_columns),
        labels=labels,
        name=name or path.stem,
    )
    return dataset, target


def write_csv(
    dataset: Dataset,
    path,
    target=None,
    label_column: str = "label",
    target_column: str = "target",
    delimiter: str = ",",
) -> None:
    """Serialize a dataset (features, then optional label/target columns)."""
    path = Path(path)
    header = list(dataset.feature_names)
    if dataset.labels is not None:
        header.append(label_column)
    if target is not None:
        target = np.asarray(target, dtype=np.float64).ravel()
        if target.shape[0] != dataset.n_points:
            raise SchemaMismatch(
                f"{target.shape[0]} targets for {dataset.n_points} rows"
            )
        header.append(target_column)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter=delimiter)
        writer.writerow(header)
        for r in range(dataset.n_points):
            row = [repr(float(v)) for v in dataset.values[r]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[r])))
            if target is not None:
                row.append(repr(float(target[r])))
            writer.writerow(row)
