"""Exception types shared across the toolkit.

Every error raised on a documented code path derives from InfoGuideError so
callers can catch one base class at harness and CLI boundaries.
"""


class InfoGuideError(Exception):
    """Base class for all errors raised by this package."""


# --- data model -------------------------------------------------------------

class InvalidDataset(InfoGuideError):
    """Dataset values are empty, non-finite, or labels are malformed."""


class LengthMismatch(InfoGuideError):
    """Paired sequences (assignments vs points, labels vs labels) differ in length."""


class OutOfRangeLabel(InfoGuideError):
    """A cluster assignment falls outside [0, k)."""


class EmptyCluster(InfoGuideError):
    """A partition declares a cluster that owns no points."""


class IndexOutOfBounds(InfoGuideError):
    """A cluster or feature index falls outside the declared range."""


class MissingRetrieval(InfoGuideError):
    """A retrieval series has no partition for the requested k."""


# --- algorithms -------------------------------------------------------------

class DatasetTooSmall(InfoGuideError):
    """Fewer points than requested clusters."""


class SingularCovariance(InfoGuideError):
    """A mixture component covariance is not positive definite and regularization is disabled."""


# --- statistics -------------------------------------------------------------

class EmptySample(InfoGuideError):
    """A statistical test received an empty sample."""


class InvalidAlpha(InfoGuideError):
    """Significance or confidence level outside its valid range."""


class InvalidCounts(InfoGuideError):
    """Successes/trials pair is not a valid binomial outcome."""


# --- selection --------------------------------------------------------------

class FeatureCountMismatch(InfoGuideError):
    """Two clusters under comparison expose different feature counts."""


class ShapeMismatch(InfoGuideError):
    """Array or partition shapes are inconsistent for the requested operation."""


class EmptyGrid(InfoGuideError):
    """The significance-level grid for selection is empty."""


# --- baseline indices -------------------------------------------------------

class KTooSmall(InfoGuideError):
    """An index needs at least two clusters."""


class ZeroWithinDispersion(InfoGuideError):
    """Within-cluster dispersion is exactly zero where a ratio needs it positive."""


class InvalidB(InfoGuideError):
    """Too few reference datasets for a dispersion baseline."""


class ProfileTooShort(InfoGuideError):
    """A selection rule needs at least two profile entries."""


class EmptyScores(InfoGuideError):
    """No finite scores to select from."""


# --- evaluation -------------------------------------------------------------

class EmptyInput(InfoGuideError):
    """An aggregate received no observations."""


class DegenerateDof(InfoGuideError):
    """Adjusted R-squared denominator n - p - 1 is not positive."""


class RankDeficient(InfoGuideError):
    """A design matrix has linearly dependent columns where a unique fit is required."""


class SeparationInfeasible(InfoGuideError):
    """Could not place cluster centroids at the requested separation."""


# --- file formats -----------------------------------------------------------

class ParseError(InfoGuideError):
    """A delimited cell could not be parsed.

    Carries the zero-based data row index and the column name.
    """

    def __init__(self, row: int, column: str, message: str = ""):
        self.row = row
        self.column = column
        detail = message or "could not parse cell"
        super().__init__(f"{detail} (row {row}, column {column!r})")


class SchemaMismatch(InfoGuideError):
    """A delimited file does not match the declared schema."""


class EmptyRecords(InfoGuideError):
    """A records file contains no usable records."""
