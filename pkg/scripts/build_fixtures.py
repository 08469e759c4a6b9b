"""Regenerate the bundled fixture CSVs and print their checksums.

Run from the repository root with the package installed:

    python scripts/build_fixtures.py [--calibrate]

iris/wine come from scikit-learn's bundled copies of the classic UCI
tables (scikit-learn is a build-time-only dependency of this script, not of
the package). The synthetic tables come from the deterministic builders in
infoguide.fixtures. --calibrate scans the county-group weight and reports
the measured regression gain per candidate instead of writing files.
"""
import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from infoguide.core import Dataset, Partition
from infoguide.datagen import write_csv
from infoguide.evaluation import RegressionEvalConfig, external_regression_eval
from infoguide.fixtures import (
    ACS_GROUP_WEIGHT,
    IRIS_FEATURES,
    WINE_FEATURES,
    build_acs_county,
    build_wine_quality,
)

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "src" / "infoguide" / "fixtures"


def checksum(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def build_iris(out: Path) -> None:
    from sklearn.datasets import load_iris

    bundle = load_iris()
    labels = bundle.target.astype(np.int64)
    names = [bundle.target_names[t] for t in labels]
    dataset = Dataset(bundle.data, IRIS_FEATURES, labels=labels, name="iris")
    # species written as strings; the loader maps them by first appearance
    import csv

    with open(out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(IRIS_FEATURES) + ["species"])
        for row, species in zip(dataset.values, names):
            writer.writerow([repr(float(v)) for v in row] + [species])


def build_wine(out: Path) -> None:
    from sklearn.datasets import load_wine

    bundle = load_wine()
    dataset = Dataset(
        bundle.data, WINE_FEATURES, labels=bundle.target.astype(np.int64), name="wine"
    )
    write_csv(dataset, out, label_column="cultivar")


def measure_gain(group_weight: float, folds: int = 10) -> tuple:
    dataset, target = build_acs_county(group_weight=group_weight)
    planted = dataset.label_partition()
    config = RegressionEvalConfig(folds=folds, seed=2024)
    with_clusters, _ = external_regression_eval(dataset, target, planted, config)
    baseline, _ = external_regression_eval(
        dataset, target, None, RegressionEvalConfig(folds=folds, seed=2024)
    )
    rng = np.random.default_rng(5)
    random_partition = Partition(rng.integers(0, 10, dataset.n_points), 10)
    with_random, _ = external_regression_eval(dataset, target, random_partition, config)
    return baseline, with_clusters - baseline, with_random - baseline


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--calibrate", action="store_true")
    args = parser.parse_args()

    if args.calibrate:
        for weight in (0.20, 0.25, 0.30, 0.35, 0.40):
            baseline, gain, random_gain = measure_gain(weight)
            print(
                f"weight={weight:.2f} baseline_r2={baseline:.4f} "
                f"planted_gain={gain:.4f} random_gain={random_gain:.4f}"
            )
        return 0

    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)

    build_iris(FIXTURE_DIR / "iris.csv")
    build_wine(FIXTURE_DIR / "wine.csv")

    quality_dataset, quality_levels = build_wine_quality()
    # the quality column stores the display levels 3..8
    import csv

    with open(FIXTURE_DIR / "wine_quality.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(quality_dataset.feature_names) + ["quality"])
        for row, level in zip(quality_dataset.values, quality_levels):
            writer.writerow([repr(float(v)) for v in row] + [str(int(level))])

    acs_dataset, acs_target = build_acs_county()
    baseline, gain, random_gain = measure_gain(ACS_GROUP_WEIGHT)
    print(
        f"acs check: baseline_r2={baseline:.4f} planted_gain={gain:.4f} "
        f"random_gain={random_gain:.4f}"
    )
    write_csv(
        acs_dataset,
        FIXTURE_DIR / "acs_county.csv",
        target=acs_target,
        label_column="county_group",
        target_column="heart_failure_deaths",
    )

    for name in ("iris", "wine", "wine_quality", "acs_county"):
        path = FIXTURE_DIR / f"{name}.csv"
        print(f"{name}: sha256={checksum(path)} bytes={path.stat().st_size}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
