"""Wildfire risk assignment and undergrounding selection for power lines.

Overlay a power-line network on daily fire-potential rasters, score each
line segment with a risk metric, aggregate across scenarios, and pick the
best set of segments to underground within a budget (0-1 knapsack).
"""

__version__ = "0.1.0"

from fireline.geometry import (
    CellIntersection,
    LineSegment,
    polyline_length,
    segment_line,
    traverse_cells,
    whole_line_segment,
)
from fireline.network import PowerLine, ValidationReport, parse_network, validate_network
from fireline.optimize import (
    ComparisonReport,
    CostModel,
    SweepPoint,
    UpgradePlan,
    brute_force,
    budget_sweep,
    compare_plans,
    segment_cost,
    solve,
    solve_greedy,
    solve_knapsack_bb,
    solve_knapsack_dp,
)
from fireline.rasters import (
    RasterGrid,
    ScenarioSet,
    load_scenario_set,
    parse_ascii_grid,
    remap_special_indices,
    serialize_ascii_grid,
)
from fireline.risk import (
    RiskTable,
    RiskVector,
    ThresholdSpec,
    aggregate_scenarios,
    apply_voltage_weight,
    build_risk_table,
    compute_threshold,
    nearest_rank,
    risk_cumulative,
    risk_max,
    threshold_counts,
)

__all__ = [
    "CellIntersection",
    "ComparisonReport",
    "CostModel",
    "LineSegment",
    "PowerLine",
    "RasterGrid",
    "RiskTable",
    "RiskVector",
    "ScenarioSet",
    "SweepPoint",
    "ThresholdSpec",
    "UpgradePlan",
    "ValidationReport",
    "aggregate_scenarios",
    "apply_voltage_weight",
    "brute_force",
    "budget_sweep",
    "build_risk_table",
    "compare_plans",
    "compute_threshold",
    "load_scenario_set",
    "nearest_rank",
    "parse_ascii_grid",
    "parse_network",
    "polyline_length",
    "remap_special_indices",
    "risk_cumulative",
    "risk_max",
    "segment_cost",
    "segment_line",
    "serialize_ascii_grid",
    "solve",
    "solve_greedy",
    "solve_knapsack_bb",
    "solve_knapsack_dp",
    "threshold_counts",
    "traverse_cells",
    "validate_network",
    "whole_line_segment",
    "__version__",
]
