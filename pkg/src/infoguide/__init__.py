"""Cluster-count selection via distributional equivalence of retrievals.

The package bundles the selection method itself (selection), the internal
indices it is compared against (baselines), the clustering algorithms that
produce retrievals (algorithms), evaluation against ground truth or an
external outcome (evaluation), dataset generation and I/O (datagen,
fixtures), and an experiment harness plus CLI (harness, cli).
"""

from .algorithms import (
    ALGORITHMS,
    AlgorithmConfig,
    FitDiagnostics,
    fit,
    fit_series,
    gmm_em,
    kmeans,
    ward_agglomerative,
    ward_series,
)
from .baselines import (
    ClusterSummary,
    GapPoint,
    GapProfile,
    MetricScore,
    calinski_harabasz,
    cluster_summary,
    gap_statistic,
    select_k_argmax,
    select_k_gap,
    silhouette,
)
from .core import (
    Dataset,
    Partition,
    RetrievalSeries,
    cluster_feature_values,
    derive_seed,
    make_rng,
    validate_partition,
)
from .datagen import (
    ARTIFICIAL_K_STAR,
    ArtificialSpec,
    CsvSchema,
    generate_artificial,
    load_csv,
    schema_from_json,
    write_csv,
)
from .errors import (
    DatasetTooSmall,
    DegenerateDof,
    EmptyCluster,
    EmptyGrid,
    EmptyInput,
    EmptyRecords,
    EmptySample,
    EmptyScores,
    FeatureCountMismatch,
    IndexOutOfBounds,
    InfoGuideError,
    InvalidAlpha,
    InvalidCounts,
    InvalidB,
    InvalidDataset,
    KTooSmall,
    LengthMismatch,
    MissingRetrieval,
    OutOfRangeLabel,
    ParseError,
    ProfileTooShort,
    RankDeficient,
    SchemaMismatch,
    SeparationInfeasible,
    ShapeMismatch,
    SingularCovariance,
    ZeroWithinDispersion,
)
from .evaluation import (
    RegressionEvalConfig,
    adjusted_r2,
    external_regression_eval,
    nmi,
    prob_true_k,
)
from .harness import (
    METRICS,
    DatasetSource,
    ExperimentConfig,
    ExperimentRecord,
    aggregate,
    count_retrieval_fits,
    read_records,
    run_experiment,
    write_records,
    write_summary_csv,
)
from .selection import (
    EquivalenceReport,
    InfoGuideResult,
    clusters_equivalent,
    default_alpha_grid,
    retrievals_equivalent,
    select_k_infoguide,
)
from .stats import (
    KsResult,
    WilsonInterval,
    bonferroni_threshold,
    kolmogorov_sf,
    ks_two_sample,
    wilson_interval,
)

__version__ = "0.1.0"
