"""Exception types raised across the fireline package."""


class FirelineError(Exception):
    """Base class for all fireline errors."""


# --- raster ingestion ---

class MalformedHeader(FirelineError):
    """ASCII-grid header is missing keys, has duplicates, or unparseable values."""


class CellCountMismatch(FirelineError):
    """Number of data values does not equal ncols * nrows."""


class NonIntegerValue(FirelineError):
    """A raster data token is not an integer."""


class ValueOutOfDomain(FirelineError):
    """A raster value is outside the published fire-potential index domain."""


class GridMisalignment(FirelineError):
    """Rasters in a scenario stack do not share the same georeference."""


# --- network ingestion ---

class MalformedDocument(FirelineError):
    """Network file is not a valid feature-collection document."""


class UnsupportedGeometry(FirelineError):
    """Feature geometry is not a LineString or MultiLineString."""


class DegenerateLine(FirelineError):
    """Line has fewer than 2 distinct vertices."""


# --- risk metrics ---

class EmptyTable(FirelineError):
    """Risk table holds no values, so no percentile threshold exists."""


# --- optimizer ---

class CapacityOverflow(FirelineError):
    """Budget / granularity exceeds the configured knapsack table limit."""


class NodeLimitExceeded(FirelineError):
    """Branch-and-bound explored more nodes than allowed."""


class TooLarge(FirelineError):
    """Instance is too large for exhaustive enumeration."""


class SegmentUniverseMismatch(FirelineError):
    """Plans or risk vectors do not cover the same set of segments."""
