"""Bundled benchmark tables, their schemas, provenance, and checksums.

iris.csv and wine.csv are the classic UCI measurement tables (150 iris
flowers / 178 wine cultivars). wine_quality.csv and acs_county.csv are
deterministic synthetic stand-ins built by the functions below: the first
mimics the red-wine quality table's shape (1599 rows, 11 physicochemical
features, 6 quality levels), the second a county-level table (3142 rows, 21
socioeconomic/health predictors, a heart-failure-mortality target, and a
planted 10-way county grouping in a column the default schema ignores).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .core import Dataset, derive_seed, make_rng
from .datagen import CsvSchema, load_csv
from .errors import SchemaMismatch

IRIS_FEATURES = ("sepal_length", "sepal_width", "petal_length", "petal_width")

WINE_FEATURES = (
    "alcohol",
    "malic_acid",
    "ash",
    "alcalinity_of_ash",
    "magnesium",
    "total_phenols",
    "flavanoids",
    "nonflavanoid_phenols",
    "proanthocyanins",
    "color_intensity",
    "hue",
    "od280_od315",
    "proline",
)

WINE_QUALITY_FEATURES = (
    "fixed_acidity",
    "volatile_acidity",
    "citric_acid",
    "residual_sugar",
    "chlorides",
    "free_sulfur_dioxide",
    "total_sulfur_dioxide",
    "density",
    "pH",
    "sulphates",
    "alcohol",
)

ACS_FEATURES = (
    "population",
    "median_age",
    "pct_over_65",
    "median_income",
    "poverty_rate",
    "unemployment_rate",
    "pct_no_insurance",
    "pct_college",
    "smoking_rate",
    "obesity_rate",
    "diabetes_rate",
    "physical_inactivity_rate",
    "pct_rural",
    "primary_care_rate",
    "air_quality_index",
    "median_home_value",
    "pct_black",
    "pct_hispanic",
    "food_insecurity_rate",
    "housing_density",
    "commute_time",
)


@dataclass(frozen=True)
class FixtureInfo:
    file: str
    schema: CsvSchema
    k_star: int | None
    dataset_type: str
    group_column: str | None
    provenance: str
    sha256: str


FIXTURES = {
    "iris": FixtureInfo(
        file="iris.csv",
        schema=CsvSchema(feature_columns=IRIS_FEATURES, label_column="species"),
        k_star=3,
        dataset_type="benchmark",
        group_column=None,
        provenance=(
            "Fisher's iris measurements (UCI ML repository), copied from "
            "scikit-learn's bundled dataset at build time"
        ),
        sha256="e404da8a0348eaa780e968c07a8f4dc90fe90eea54ddceeb5b444ce0caae8d30",
    ),
    "wine": FixtureInfo(
        file="wine.csv",
        schema=CsvSchema(feature_columns=WINE_FEATURES, label_column="cultivar"),
        k_star=3,
        dataset_type="benchmark",
        group_column=None,
        provenance=(
            "Wine cultivar chemistry (UCI ML repository), copied from "
            "scikit-learn's bundled dataset at build time"
        ),
        sha256="1ac32977f8b75347d1f04e461a966e76738a4e01968e5c3707d5b9ed1cdef694",
    ),
    "wine_quality": FixtureInfo(
        file="wine_quality.csv",
        schema=CsvSchema(feature_columns=WINE_QUALITY_FEATURES, label_column="quality"),
        k_star=6,
        dataset_type="benchmark",
        group_column=None,
        provenance=(
            "Synthetic stand-in generated by build_wine_quality(seed=7): "
            "red-wine-shaped table, 6 quality levels with the usual skewed counts"
        ),
        sha256="54b3ecd017c4afa72755636276765447257353dae0928124afa8c420e567d1fe",
    ),
    "acs_county": FixtureInfo(
        file="acs_county.csv",
        schema=CsvSchema(
            feature_columns=ACS_FEATURES,
            target_column="heart_failure_deaths",
        ),
        k_star=None,
        dataset_type="real_world",
        group_column="county_group",
        provenance=(
            "Synthetic stand-in generated by build_acs_county(seed=11): "
            "county-shaped table with a planted 10-way grouping whose "
            "intercepts carry extra target variance"
        ),
        sha256="affc9435c5d17156869301283eb5540275755fb2228e480800624b6822a280a5",
    ),
}


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise SchemaMismatch(f"unknown fixture {name!r}")
    return Path(resources.files("infoguide") / "fixtures" / FIXTURES[name].file)


def fixture_checksum(name: str) -> str:
    digest = hashlib.sha256()
    digest.update(fixture_path(name).read_bytes())
    return digest.hexdigest()


def verify_checksums() -> dict:
    """Map fixture name to True when its file matches the recorded digest."""
    return {
        name: fixture_checksum(name) == info.sha256
        for name, info in FIXTURES.items()
    }


def load_fixture(name: str, with_groups: bool = False):
    """Load a bundled table.

    Returns (Dataset, target) like load_csv. with_groups=True maps the
    planted grouping column (where one exists) in as labels.
    """
    info = FIXTURES[name]
    schema = info.schema
    if with_groups:
        if info.group_column is None:
            raise SchemaMismatch(f"fixture {name!r} has no group column")
        schema = replace(schema, label_column=info.group_column)
    return load_csv(fixture_path(name), schema, name=name)


# --- synthetic builders -----------------------------------------------------

# Skewed level counts matching the red-wine quality table.
_WINE_QUALITY_COUNTS = (10, 53, 681, 638, 199, 18)

# Display transforms: (mean, sd) per feature.
_WINE_QUALITY_SCALES = (
    (8.32, 1.74),
    (0.53, 0.18),
    (0.27, 0.19),
    (2.54, 1.41),
    (0.087, 0.047),
    (15.9, 10.5),
    (46.5, 32.9),
    (0.9967, 0.0019),
    (3.31, 0.15),
    (0.66, 0.17),
    (10.4, 1.07),
)

# Loading of each feature on the latent quality level.
_WINE_QUALITY_LOADINGS = (
    0.15, -0.8, 0.5, 0.05, -0.3, -0.1, -0.4, -0.5, -0.2, 0.4, 0.9,
)


def build_wine_quality(seed: int = 7):
    """Deterministic red-wine-shaped table. Returns (Dataset, None).

    Quality levels 3..8 drive each feature through its loading; the label
    column stores the level so loading maps it to 6 contiguous ids.
    """
    rng = make_rng(derive_seed(seed, "wine-quality"))
    counts = np.asarray(_WINE_QUALITY_COUNTS)
    n = int(counts.sum())
    f = len(WINE_QUALITY_FEATURES)
    level = np.repeat(np.arange(6), counts)
    latent_level = (level - 2.5) * 0.9
    loadings = np.asarray(_WINE_QUALITY_LOADINGS)
    latent = latent_level[:, None] * loadings[None, :] + rng.normal(0.0, 1.0, (n, f))
    values = np.empty((n, f))
    for j, (mean, sd) in enumerate(_WINE_QUALITY_SCALES):
        values[:, j] = mean + sd * latent[:, j]
    order = rng.permutation(n)
    dataset = Dataset(
        values[order],
        WINE_QUALITY_FEATURES,
        labels=level[order],
        name="wine_quality",
    )
    return dataset, level[order] + 3


# Calibrated weight of the planted group intercepts in the target; set so
# cluster indicators explain several extra points of out-of-sample variance
# beyond the raw predictors (the predictors partially interpolate the group
# means, which attenuates the nominal effect).
ACS_GROUP_WEIGHT = 0.45

_ACS_SCALES = (
    (104000.0, 330000.0),
    (41.2, 5.3),
    (18.6, 4.6),
    (52000.0, 14000.0),
    (14.8, 5.9),
    (5.1, 2.1),
    (10.5, 5.2),
    (22.1, 9.6),
    (17.5, 3.6),
    (32.0, 4.5),
    (11.5, 2.3),
    (26.0, 5.2),
    (58.0, 31.0),
    (55.0, 25.0),
    (38.0, 9.0),
    (165000.0, 92000.0),
    (9.0, 14.5),
    (9.6, 13.7),
    (13.0, 3.9),
    (270.0, 1800.0),
    (23.5, 5.6),
)


def build_acs_county(
    seed: int = 11,
    n_counties: int = 3142,
    n_groups: int = 10,
    group_weight: float = ACS_GROUP_WEIGHT,
):
    """Deterministic county-shaped table. Returns (Dataset, target).

    Counties fall into n_groups latent groups; group means shift the
    predictors, and independent group intercepts add target variance that
    raw predictors can only partially mimic. The grouping lands in the
    dataset labels (column county_group on disk).
    """
    rng = make_rng(derive_seed(seed, "acs-county"))
    f = len(ACS_FEATURES)
    weights = rng.dirichlet(np.full(n_groups, 8.0))
    sizes = np.maximum(1, np.round(weights * n_counties).astype(np.int64))
    while sizes.sum() != n_counties:
        adjust = 1 if sizes.sum() < n_counties else -1
        slot = int(rng.integers(n_groups))
        if sizes[slot] + adjust >= 1:
            sizes[slot] += adjust
    group = np.repeat(np.arange(n_groups), sizes)

    group_means = rng.normal(0.0, 1.5, size=(n_groups, f))
    latent = group_means[group] + rng.normal(0.0, 1.0, size=(n_counties, f))

    beta = rng.normal(0.0, 1.0, size=f)
    signal = latent @ beta
    signal = signal / signal.std()
    intercepts = rng.normal(0.0, 1.0, size=n_groups)
    group_effect = intercepts[group]
    group_effect = group_effect / group_effect.std()
    noise = rng.normal(0.0, 1.0, size=n_counties)
    y = signal + group_weight * group_effect + 1.0 * noise
    target = 380.0 + 75.0 * (y - y.mean()) / y.std()

    values = np.empty((n_counties, f))
    for j, (mean, sd) in enumerate(_ACS_SCALES):
        values[:, j] = mean + sd * latent[:, j]

    order = rng.permutation(n_counties)
    dataset = Dataset(
        values[order],
        ACS_FEATURES,
        labels=group[order],
        name="acs_county",
    )
    return dataset, target[order]
