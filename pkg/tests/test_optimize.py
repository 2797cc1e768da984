import numpy as np
import pytest

from conftest import make_segment
from fireline.errors import (
    CapacityOverflow,
    NodeLimitExceeded,
    SegmentUniverseMismatch,
    TooLarge,
)
from fireline.optimize import (
    KM_TO_MILES,
    CostModel,
    brute_force,
    budget_sweep,
    compare_plans,
    segment_cost,
    solve,
    solve_greedy,
    solve_knapsack_bb,
    solve_knapsack_dp,
    write_plan,
    write_sweep,
)
from fireline.risk import RiskVector


def picked(plan):
    return sorted(plan.selected, key=int)


# --- cost model ---

def test_segment_cost_one_mile():
    seg = make_segment([(0.0, 0.0), (1.609344, 0.0)])
    assert segment_cost(seg, CostModel()) == pytest.approx(2_000_000.0, abs=1.0)


def test_segment_cost_ten_km():
    seg = make_segment([(0.0, 0.0), (10.0, 0.0)])
    assert segment_cost(seg, CostModel()) == pytest.approx(12_427_420.0, abs=1.0)


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel(usd_per_mile=0.0)


# --- dp solver ---

def test_dp_single_slot_takes_higher_risk():
    plan = solve_knapsack_dp([10.0, 20.0], [1e6, 1e6], 1e6)
    assert picked(plan) == ["1"]
    assert plan.removed_risk == 20.0
    assert plan.residual_risk == 10.0
    assert plan.solver == "dp"


def test_dp_zero_budget():
    plan = solve_knapsack_dp([10.0, 20.0], [1e6, 1e6], 0.0)
    assert plan.selected == frozenset()
    assert plan.residual_risk == 30.0


def test_dp_rounds_costs_up():
    # 150k rounds up to 2 units; one fits in a 250k budget, two do not
    plan = solve_knapsack_dp([5.0, 5.0], [150_000.0, 150_000.0], 250_000.0)
    assert len(plan.selected) == 1
    assert plan.total_cost_usd <= plan.budget_usd


def test_dp_capacity_overflow():
    with pytest.raises(CapacityOverflow):
        solve_knapsack_dp([1.0], [1.0], 2e12, granularity_usd=100.0)


def test_dp_matches_brute_force_on_rounded_instance():
    rng = np.random.default_rng(40)
    g = 100_000.0
    for _ in range(60):
        n = int(rng.integers(1, 16))
        R = rng.uniform(0, 1e4, n)
        C = rng.uniform(0.1e6, 50e6, n)
        budget = float(rng.uniform(0, C.sum()))
        dp = solve_knapsack_dp(R, C, budget, granularity_usd=g)
        oracle = brute_force(R, np.ceil(C / g) * g, np.floor(budget / g) * g)
        assert dp.removed_risk == oracle.removed_risk
        assert dp.selected == oracle.selected


# --- branch and bound ---

def test_bb_takes_everything_when_budget_allows():
    plan = solve_knapsack_bb([1.0, 2.0, 3.0], [1e6, 1e6, 1e6], 3e6)
    assert picked(plan) == ["0", "1", "2"]
    assert plan.residual_risk == 0.0


def test_bb_classic_instance():
    plan = solve_knapsack_bb([6.0, 10.0, 12.0], [1e6, 2e6, 3e6], 5e6)
    assert picked(plan) == ["1", "2"]
    assert plan.removed_risk == 22.0


def test_bb_matches_brute_force():
    rng = np.random.default_rng(41)
    for _ in range(60):
        n = int(rng.integers(1, 16))
        R = rng.uniform(0, 1e4, n)
        C = rng.uniform(0.1e6, 50e6, n)
        budget = float(rng.uniform(0, C.sum()))
        bb = solve_knapsack_bb(R, C, budget)
        oracle = brute_force(R, C, budget)
        assert bb.removed_risk == oracle.removed_risk
        assert bb.selected == oracle.selected


def test_bb_node_limit():
    rng = np.random.default_rng(42)
    R = rng.uniform(1, 2, 30)
    C = rng.uniform(1, 2, 30)
    with pytest.raises(NodeLimitExceeded):
        solve_knapsack_bb(R, C, float(C.sum() / 2), node_limit=10)


# --- greedy ---

def test_greedy_single_slot():
    plan = solve_greedy([10.0, 20.0], [1e6, 1e6], 1e6)
    assert picked(plan) == ["1"]
    assert plan.solver == "greedy"


def test_greedy_equal_density_prefers_larger_risk_then_smaller_index():
    # densities all equal; order should be R desc then index asc
    plan = solve_greedy([2.0, 4.0, 4.0], [1.0, 2.0, 2.0], 2.0)
    assert picked(plan) == ["1"]
    plan = solve_greedy([2.0, 4.0, 4.0], [1.0, 2.0, 2.0], 3.0)
    assert picked(plan) == ["0", "1"]


def test_greedy_never_beats_exact():
    rng = np.random.default_rng(43)
    for _ in range(200):
        n = int(rng.integers(1, 14))
        R = rng.uniform(0, 1e4, n)
        C = rng.uniform(0.1e6, 50e6, n)
        budget = float(rng.uniform(0, C.sum()))
        greedy = solve_greedy(R, C, budget)
        exact = solve_knapsack_bb(R, C, budget)
        assert greedy.removed_risk <= exact.removed_risk
        assert greedy.total_cost_usd <= budget


# --- brute force ---

def test_brute_force_empty_instance():
    plan = brute_force([], [], 1e6)
    assert plan.selected == frozenset()
    assert plan.removed_risk == 0.0


def test_brute_force_single_item():
    assert picked(brute_force([5.0], [1.0], 2.0)) == ["0"]
    assert brute_force([0.0], [1.0], 2.0).selected == frozenset()


def test_brute_force_three_items():
    plan = brute_force([6.0, 10.0, 12.0], [1e6, 2e6, 3e6], 5e6)
    assert picked(plan) == ["1", "2"]


def test_brute_force_too_large():
    with pytest.raises(TooLarge):
        brute_force([1.0] * 26, [1.0] * 26, 5.0)


# --- tie-breaking agreement across solvers ---

@pytest.mark.parametrize(
    "R,C,budget,expected",
    [
        ([0.0, 5.0], [1.0, 1.0], 2.0, ["1"]),  # zero-risk items never selected
        ([5.0, 5.0, 0.0], [1.0, 1.0, 1.0], 3.0, ["0", "1"]),
        ([5.0, 5.0], [1.0, 1.0], 1.0, ["0"]),  # equal value, smaller index wins
        ([3.0, 3.0, 3.0], [1.0, 1.0, 2.0], 2.0, ["0", "1"]),
        ([4.0, 2.0, 2.0, 4.0], [2.0, 1.0, 1.0, 2.0], 2.0, ["0"]),  # {0} beats {1,2}
    ],
)
def test_tie_break_consistency(R, C, budget, expected):
    assert picked(brute_force(R, C, budget)) == expected
    assert picked(solve_knapsack_bb(R, C, budget)) == expected
    assert picked(solve_knapsack_dp(R, C, budget, granularity_usd=1.0)) == expected


def test_scaling_equivariance():
    rng = np.random.default_rng(44)
    for _ in range(30):
        n = int(rng.integers(1, 12))
        R = rng.uniform(0, 100, n)
        C = rng.uniform(1, 10, n)
        budget = float(rng.uniform(0, C.sum()))
        base = solve_knapsack_bb(R, C, budget)
        scaled = solve_knapsack_bb(R * 7.5, C, budget)
        assert base.selected == scaled.selected


def test_plan_conservation():
    rng = np.random.default_rng(45)
    R = rng.uniform(0, 100, 12)
    C = rng.uniform(1, 10, 12)
    plan = solve_knapsack_bb(R, C, float(C.sum() / 3))
    assert plan.removed_risk + plan.residual_risk == pytest.approx(R.sum(), rel=1e-12)


def test_validation_rejects_bad_instances():
    with pytest.raises(ValueError):
        solve_knapsack_bb([-1.0], [1.0], 1.0)
    with pytest.raises(ValueError):
        solve_knapsack_bb([1.0], [0.0], 1.0)
    with pytest.raises(ValueError):
        solve_knapsack_bb([1.0], [1.0], -1.0)
    with pytest.raises(ValueError):
        solve([1.0], [1.0], 1.0, solver="magic")


# --- budget sweep ---

def test_sweep_zero_budget_point():
    points = budget_sweep([5.0], [1e6], [0.0])
    assert len(points) == 1
    assert points[0].n_selected == 0 and points[0].removed_risk == 0.0


def test_sweep_full_budget_removes_everything():
    R = [5.0, 7.0, 2.0]
    C = [1e6, 2e6, 3e6]
    points = budget_sweep(R, C, [sum(C)])
    assert points[0].residual_risk == 0.0
    assert points[0].n_selected == 3


def test_sweep_monotone_under_exact_solver():
    rng = np.random.default_rng(46)
    R = rng.uniform(0, 100, 14)
    C = rng.uniform(1e5, 5e6, 14)
    budgets = np.sort(rng.uniform(0, C.sum(), 20))
    points = budget_sweep(R, C, budgets.tolist())
    removed = [p.removed_risk for p in points]
    assert all(b >= a - 1e-9 for a, b in zip(removed, removed[1:]))


def test_sweep_rejects_decreasing_budgets():
    with pytest.raises(ValueError):
        budget_sweep([1.0], [1.0], [2.0, 1.0])


# --- plan comparison ---

def vector_of(ids, values):
    return RiskVector(tuple(ids), np.asarray(values, dtype=float), "scenario_sum")


def test_compare_identical_plans():
    ids = ("a", "b", "c")
    vec = vector_of(ids, [1.0, 2.0, 3.0])
    plan = solve_knapsack_bb(vec.R, [1.0, 1.0, 1.0], 2.0, segment_ids=ids)
    report = compare_plans({"m1": plan, "m2": plan}, {"m1": vec, "m2": vec})
    assert report.pairwise_matches[("m1", "m2")] == len(plan.selected)
    assert report.allway_pct["m1"] == 100.0
    assert report.reduction_pct[("m1", "m2")] == report.reduction_pct[("m2", "m2")]


def test_compare_disjoint_plans():
    ids = ("a", "b", "c", "d")
    v1 = vector_of(ids, [10.0, 1.0, 1.0, 10.0])
    v2 = vector_of(ids, [1.0, 10.0, 10.0, 1.0])
    p1 = solve_knapsack_bb(v1.R, [1.0] * 4, 2.0, segment_ids=ids)
    p2 = solve_knapsack_bb(v2.R, [1.0] * 4, 2.0, segment_ids=ids)
    assert p1.selected == {"a", "d"} and p2.selected == {"b", "c"}
    report = compare_plans({"m1": p1, "m2": p2}, {"m1": v1, "m2": v2})
    assert report.pairwise_matches[("m1", "m2")] == 0
    assert report.allway_matches == 0


def test_compare_counts_match_set_oracle():
    rng = np.random.default_rng(47)
    ids = tuple(f"s{i}" for i in range(30))
    plans = {}
    vectors = {}
    for metric in ("a", "b", "c"):
        values = rng.uniform(0, 100, 30)
        vectors[metric] = vector_of(ids, values)
        plans[metric] = solve_greedy(
            values, rng.uniform(1, 5, 30), 20.0, segment_ids=ids
        )
    report = compare_plans(plans, vectors)
    sel = {m: set(plans[m].selected) for m in plans}
    assert report.pairwise_matches[("a", "b")] == len(sel["a"] & sel["b"])
    assert report.pairwise_matches[("b", "c")] == len(sel["b"] & sel["c"])
    assert report.allway_matches == len(sel["a"] & sel["b"] & sel["c"])
    for m in plans:
        total = vectors[m].R.sum()
        removed = sum(
            r for sid, r in zip(ids, vectors[m].R) if sid in plans[m].selected
        )
        assert report.reduction_pct[(m, m)] == pytest.approx(100 * removed / total)


def test_compare_universe_mismatch():
    v1 = vector_of(("a", "b"), [1.0, 2.0])
    v2 = vector_of(("a", "x"), [1.0, 2.0])
    p1 = solve_knapsack_bb(v1.R, [1.0, 1.0], 2.0, segment_ids=v1.segment_ids)
    p2 = solve_knapsack_bb(v2.R, [1.0, 1.0], 2.0, segment_ids=v2.segment_ids)
    with pytest.raises(SegmentUniverseMismatch):
        compare_plans({"m1": p1, "m2": p2}, {"m1": v1, "m2": v2})


# --- file formats ---

def test_plan_file_format(tmp_path):
    ids = ("a", "b")
    vec = vector_of(ids, [1.0, 2.0])
    costs = [1e6, 2e6]
    plan = solve_knapsack_bb(vec.R, costs, 2e6, segment_ids=ids)
    path = tmp_path / "plan.csv"
    write_plan(plan, vec, costs, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "segment_id,selected,R,cost_usd"
    assert lines[1] == "a,0,1.0,1000000.0"
    assert lines[2] == "b,1,2.0,2000000.0"
    assert "budget_usd=2000000.0" in lines
    assert "solver=branch_and_bound" in lines


def test_sweep_file_format(tmp_path):
    points = budget_sweep([5.0], [1e6], [0.0, 1e6])
    path = tmp_path / "sweep.csv"
    write_sweep(points, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "budget_usd,removed_risk,residual_risk,n_selected"
    assert lines[1] == "0.0,0.0,5.0,0"
    assert lines[2] == "1000000.0,5.0,0.0,1"
