"""Per-segment wildfire risk metrics and their scenario aggregation.

Two base metrics are computed from a segment's cell intersections: the
maximum fire-potential value it touches, and the cumulative metric -- the
line integral of fire potential along the segment (sum of cell value times
in-cell length). Scenario stacks aggregate by summation, by counting
days above a percentile threshold, or with a voltage-dependent weight.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from fireline.errors import EmptyTable, GridMisalignment
from fireline.geometry import LineSegment, overlay_lengths
from fireline.rasters import RasterGrid, ScenarioSet

log = logging.getLogger(__name__)

METRICS = ("maximum", "cumulative")

DEFAULT_KV_THRESHOLD = 69.0
DEFAULT_KV_FACTOR = 3.0


@dataclass(frozen=True, eq=False)
class RiskTable:
    """Matrix of per-segment, per-scenario risk values for one base metric."""

    metric: str
    segment_ids: tuple[str, ...]
    scenario_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        expected = (len(self.segment_ids), len(self.scenario_ids))
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")
        if self.values.size and self.values.min() < 0:
            raise ValueError("risk values must be nonnegative")


@dataclass(frozen=True, eq=False)
class RiskVector:
    """Aggregated per-segment risk; provenance records how it was built."""

    segment_ids: tuple[str, ...]
    R: np.ndarray
    provenance: str

    def __post_init__(self):
        if len(self.R) != len(self.segment_ids):
            raise ValueError("R length does not match segment_ids")
        if len(self.R) and np.min(self.R) < 0:
            raise ValueError("aggregated risk must be nonnegative")


@dataclass(frozen=True, eq=False)
class ThresholdSpec:
    """How the high-risk threshold is derived from a risk table.

    tau stays None until compute_threshold fills it: a scalar for the
    global pooled population, a per-row array for the per-line population.
    """

    base_metric: str
    percentile: float = 75.0
    population: str = "global_pooled"
    strict: bool = False
    tau: float | np.ndarray | None = None

    def __post_init__(self):
        if not 0 < self.percentile <= 100:
            raise ValueError("percentile must be in (0, 100]")
        if self.population not in ("global_pooled", "per_line"):
            raise ValueError(f"unknown population {self.population!r}")


def _segment_overlays(segments: Sequence[LineSegment], grid: RasterGrid):
    """Flattened cell indices and lengths for a batch of segments.

    Returns (flat_cell_idx, lengths, offsets) where offsets[i]:offsets[i+1]
    slices out segment i's cells.
    """
    idx: list[int] = []
    lengths: list[float] = []
    offsets = [0]
    for seg in segments:
        cells, _ = overlay_lengths(seg, grid)
        for cell in cells:
            idx.append(cell.row * grid.ncols + cell.col)
            lengths.append(cell.length_km)
        offsets.append(len(idx))
    return (
        np.asarray(idx, dtype=np.intp),
        np.asarray(lengths, dtype=np.float64),
        np.asarray(offsets, dtype=np.intp),
    )


def _metric_column(flat_idx, lengths, offsets, grid: RasterGrid, metric: str):
    """One scenario's risk value per segment, from precomputed overlays."""
    n = len(offsets) - 1
    out = np.zeros(n, dtype=np.float64)
    if len(flat_idx) == 0:
        return out
    cell_values = grid.values.ravel()[flat_idx].astype(np.float64)
    counts = np.diff(offsets)
    nonempty = counts > 0
    starts = offsets[:-1][nonempty]
    if metric == "cumulative":
        out[nonempty] = np.add.reduceat(cell_values * lengths, starts)
    else:
        out[nonempty] = np.maximum.reduceat(cell_values, starts)
    return out


def risk_max(segment: LineSegment, grid: RasterGrid) -> float:
    """Largest raster value the segment intersects; 0 when it misses the grid."""
    flat_idx, lengths, offsets = _segment_overlays([segment], grid)
    return float(_metric_column(flat_idx, lengths, offsets, grid, "maximum")[0])


def risk_cumulative(segment: LineSegment, grid: RasterGrid) -> float:
    """Line integral of raster risk along the segment (value x km per cell)."""
    flat_idx, lengths, offsets = _segment_overlays([segment], grid)
    return float(_metric_column(flat_idx, lengths, offsets, grid, "cumulative")[0])


def build_risk_table(
    segments: Sequence[LineSegment], scenario_set: ScenarioSet, metric: str
) -> RiskTable:
    """Fill r[l][s] for every segment and scenario under one base metric.

    All scenario grids share a georeference, so each segment's cell
    traversal is computed once and reused across scenarios.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if len(scenario_set) == 0:
        raise ValueError("scenario set is empty")
    grids = scenario_set.grids
    ref = grids[0].georeference
    for label, grid in scenario_set.scenarios:
        if grid.georeference != ref:
            raise GridMisalignment(f"scenario {label!r} is not aligned")

    flat_idx, lengths, offsets = _segment_overlays(segments, grids[0])
    values = np.empty((len(segments), len(grids)), dtype=np.float64)
    for s, grid in enumerate(grids):
        values[:, s] = _metric_column(flat_idx, lengths, offsets, grid, metric)
    return RiskTable(
        metric=metric,
        segment_ids=tuple(seg.segment_id for seg in segments),
        scenario_ids=scenario_set.labels,
        values=values,
    )


def aggregate_scenarios(table: RiskTable) -> RiskVector:
    """Sum each segment's risk across all scenarios."""
    return RiskVector(
        segment_ids=table.segment_ids,
        R=table.values.sum(axis=1),
        provenance="scenario_sum",
    )


def nearest_rank(values: np.ndarray, percentile: float) -> float:
    """The ceil(p/100 * n)-th smallest value of a population."""
    flat = np.asarray(values, dtype=np.float64).ravel()
    if flat.size == 0:
        raise EmptyTable("cannot take a percentile of an empty population")
    k = math.ceil(percentile / 100.0 * flat.size)
    k = min(max(k, 1), flat.size)
    return float(np.partition(flat, k - 1)[k - 1])


def compute_threshold(table: RiskTable, spec: ThresholdSpec) -> ThresholdSpec:
    """Fill spec.tau with the nearest-rank percentile of the chosen population."""
    if table.metric != spec.base_metric:
        raise ValueError(
            f"table metric {table.metric!r} != spec base metric {spec.base_metric!r}"
        )
    if table.values.size == 0:
        raise EmptyTable("risk table has no values")
    if spec.population == "global_pooled":
        tau = nearest_rank(table.values, spec.percentile)
    else:
        tau = np.array(
            [nearest_rank(row, spec.percentile) for row in table.values],
            dtype=np.float64,
        )
    return replace(spec, tau=tau)


def threshold_counts(table: RiskTable, spec: ThresholdSpec) -> RiskVector:
    """Count, per segment, the scenarios whose risk meets the threshold."""
    if spec.tau is None:
        raise ValueError("spec.tau has not been computed; call compute_threshold")
    tau = spec.tau if np.isscalar(spec.tau) else np.asarray(spec.tau)[:, None]
    hits = table.values > tau if spec.strict else table.values >= tau
    return RiskVector(
        segment_ids=table.segment_ids,
        R=hits.sum(axis=1).astype(np.float64),
        provenance="threshold_count",
    )


def apply_voltage_weight(
    vector: RiskVector,
    segments: Sequence[LineSegment],
    kv_threshold: float = DEFAULT_KV_THRESHOLD,
    factor: float = DEFAULT_KV_FACTOR,
) -> RiskVector:
    """Scale risk by `factor` for segments rated below kv_threshold.

    Segments at or above the threshold keep their values bit-identically;
    segments without a voltage are left unweighted and logged.
    """
    ids = tuple(seg.segment_id for seg in segments)
    if ids != tuple(vector.segment_ids):
        raise ValueError("segment order does not match the risk vector")
    weights = np.ones(len(segments), dtype=np.float64)
    unknown = []
    for i, seg in enumerate(segments):
        if seg.voltage_kv is None:
            unknown.append(seg.segment_id)
        elif seg.voltage_kv < kv_threshold:
            weights[i] = factor
    if unknown:
        shown = ", ".join(unknown[:10])
        more = f" (+{len(unknown) - 10} more)" if len(unknown) > 10 else ""
        log.warning(
            "%d segments without voltage left unweighted: %s%s",
            len(unknown), shown, more,
        )
    return RiskVector(
        segment_ids=vector.segment_ids,
        R=vector.R * weights,
        provenance=f"voltage_weighted({vector.provenance})",
    )


def write_risk_table(table: RiskTable, path) -> None:
    """Write the per-(segment, scenario) table as CSV."""
    with open(path, "w", newline="") as fh:
        fh.write("segment_id,scenario_id,value,metric\n")
        for i, seg_id in enumerate(table.segment_ids):
            row = table.values[i]
            for j, scen_id in enumerate(table.scenario_ids):
                fh.write(f"{seg_id},{scen_id},{float(row[j])!r},{table.metric}\n")


def write_risk_vector(vector: RiskVector, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("segment_id,R,provenance\n")
        for seg_id, r in zip(vector.segment_ids, vector.R):
            fh.write(f"{seg_id},{float(r)!r},{vector.provenance}\n")


def read_risk_vector(path) -> RiskVector:
    segment_ids = []
    values = []
    provenance = None
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if header != "segment_id,R,provenance":
            raise ValueError(f"{path}: not a risk-vector file (header {header!r})")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            seg_id, r, prov = line.split(",", 2)
            segment_ids.append(seg_id)
            values.append(float(r))
            provenance = prov
    return RiskVector(
        segment_ids=tuple(segment_ids),
        R=np.asarray(values, dtype=np.float64),
        provenance=provenance or "scenario_sum",
    )
