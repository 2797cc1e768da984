"""Budget-constrained selection of segments to underground.

The selection model is a 0-1 knapsack: maximize the total risk removed
subject to the summed undergrounding cost staying within budget. Solvers:
an exact dynamic program on costs rounded up to a granularity, an exact
branch-and-bound on unrounded costs, a density greedy heuristic, and an
exhaustive oracle for testing. All solvers break value ties the same way,
preferring the lexicographically smallest selected index set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from fireline.errors import (
    CapacityOverflow,
    NodeLimitExceeded,
    SegmentUniverseMismatch,
    TooLarge,
)
from fireline.geometry import LineSegment
from fireline.risk import RiskVector

KM_TO_MILES = 0.621371

SOLVERS = ("dp", "branch_and_bound", "greedy", "brute_force")


@dataclass(frozen=True)
class CostModel:
    """Undergrounding cost: flat dollars per mile of line."""

    usd_per_mile: float = 2_000_000.0

    def __post_init__(self):
        if self.usd_per_mile <= 0:
            raise ValueError("usd_per_mile must be > 0")


@dataclass(frozen=True)
class UpgradePlan:
    """A feasible set of segments chosen for undergrounding."""

    selected: frozenset[str]
    total_cost_usd: float
    removed_risk: float
    residual_risk: float
    budget_usd: float
    solver: str


@dataclass(frozen=True)
class SweepPoint:
    budget_usd: float
    removed_risk: float
    residual_risk: float
    n_selected: int


@dataclass(frozen=True)
class ComparisonReport:
    """Cross-metric evaluation of upgrade plans over one segment universe."""

    metrics: tuple[str, ...]
    n_selected: dict[str, int]
    reduction_pct: dict[tuple[str, str], float]  # (plan metric, evaluated metric)
    pairwise_matches: dict[tuple[str, str], int]
    allway_matches: int
    allway_pct: dict[str, float]


def segment_cost(segment: LineSegment, cost_model: CostModel) -> float:
    """Undergrounding cost of one segment in USD."""
    if segment.length_km <= 0:
        raise ValueError("segment length must be > 0")
    return cost_model.usd_per_mile * segment.length_km * KM_TO_MILES


def _check_instance(R, C, budget_usd):
    R = np.asarray(R, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if R.shape != C.shape or R.ndim != 1:
        raise ValueError("R and C must be 1-d and the same length")
    if (R < 0).any():
        raise ValueError("risk values must be >= 0")
    if (C <= 0).any():
        raise ValueError("costs must be > 0")
    if budget_usd < 0:
        raise ValueError("budget must be >= 0")
    return R, C


def _make_plan(R, C, budget_usd, chosen, solver, segment_ids) -> UpgradePlan:
    """Assemble a plan; risk sums run in ascending index order for all solvers."""
    chosen = sorted(chosen)
    if segment_ids is None:
        segment_ids = [str(i) for i in range(len(R))]
    picked = set(chosen)
    removed = 0.0
    residual = 0.0
    cost = 0.0
    for i in range(len(R)):
        if i in picked:
            removed += R[i]
            cost += C[i]
        else:
            residual += R[i]
    return UpgradePlan(
        selected=frozenset(segment_ids[i] for i in chosen),
        total_cost_usd=float(cost),
        removed_risk=float(removed),
        residual_risk=float(residual),
        budget_usd=float(budget_usd),
        solver=solver,
    )


def solve_knapsack_dp(
    R,
    C,
    budget_usd: float,
    granularity_usd: float = 100_000.0,
    *,
    segment_ids: Sequence[str] | None = None,
    table_limit: int = 10_000_000,
) -> UpgradePlan:
    """Exact knapsack on costs rounded up to granularity units.

    Rounding costs up means a selection that fits the rounded budget always
    fits the true budget. Optimal for the rounded instance.
    """
    R, C = _check_instance(R, C, budget_usd)
    if granularity_usd <= 0:
        raise ValueError("granularity_usd must be > 0")
    if budget_usd / granularity_usd > table_limit:
        raise CapacityOverflow(
            f"budget / granularity = {budget_usd / granularity_usd:.0f} exceeds "
            f"the table limit of {table_limit}"
        )
    n = len(R)
    cap = int(math.floor(budget_usd / granularity_usd))
    units = np.ceil(C / granularity_usd).astype(np.int64)

    # g[w] = best value over items i.. with w units of budget, built from the
    # last item backwards; take_bits[i] records the tie-broken decision so the
    # forward reconstruction needs no float re-derivation. On a value tie an
    # item is taken only if it carries risk: zero-risk items are never
    # selected, and preferring to take positive-risk items earliest yields the
    # lexicographically smallest selected index set.
    g = np.zeros(cap + 1, dtype=np.float64)
    take_bits: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    v_take = np.empty(cap + 1, dtype=np.float64)
    for i in range(n - 1, -1, -1):
        c = int(units[i])
        v_take.fill(-1.0)
        if c <= cap:
            v_take[c:] = R[i] + g[: cap + 1 - c]
        take = (v_take > g) | ((v_take == g) & (R[i] > 0))
        np.copyto(g, v_take, where=take)
        take_bits[i] = np.packbits(take)

    chosen = []
    w = cap
    for i in range(n):
        if (take_bits[i][w >> 3] >> (7 - (w & 7))) & 1:
            chosen.append(i)
            w -= int(units[i])
    return _make_plan(R, C, budget_usd, chosen, "dp", segment_ids)


def _density_order(R, C):
    return sorted(range(len(R)), key=lambda i: (-(R[i] / C[i]), -R[i], i))


def _greedy_fill(R, C, budget_usd, order):
    chosen = []
    cap = budget_usd
    value = 0.0
    for i in order:
        if C[i] <= cap:
            cap -= C[i]
            value += R[i]
            chosen.append(i)
    return value, chosen


def solve_greedy(
    R, C, budget_usd: float, *, segment_ids: Sequence[str] | None = None
) -> UpgradePlan:
    """Density heuristic: scan by R/C descending, add whatever still fits."""
    R, C = _check_instance(R, C, budget_usd)
    _, chosen = _greedy_fill(R, C, budget_usd, _density_order(R, C))
    return _make_plan(R, C, budget_usd, chosen, "greedy", segment_ids)


class _NodeBudget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1) -> None:
        self.used += n
        if self.used > self.limit:
            raise NodeLimitExceeded(f"explored more than {self.limit} nodes")


def _bnb_value(R, C, items, cap, nodes: _NodeBudget):
    """Max value over subsets of `items` within cap, by branch and bound.

    Branches in density order, take-branch first, seeded with the greedy
    fill so equal-value subtrees prune immediately. Items with exactly
    equal cost are exchangeable: some optimal solution takes a
    risk-descending prefix of each such group, so skipping one member
    closes its whole group. That collapses the otherwise exponential
    plateau of interchangeable picks on uniform-cost instances. Returns
    (value, chosen) with chosen the first-found optimal subset.
    """
    order = sorted(items, key=lambda i: (-(R[i] / C[i]), -R[i], i))
    n = len(order)
    best_value, best_set = _greedy_fill(R, C, cap, order)

    members: dict[float, int] = {}
    for j in order:
        members[C[j]] = members.get(C[j], 0) + 1
    gid_of_cost: dict[float, int] = {}
    group_of = []
    for j in order:
        c = C[j]
        if members[c] > 1:
            if c not in gid_of_cost:
                gid_of_cost[c] = len(gid_of_cost)
            group_of.append(gid_of_cost[c])
        else:
            group_of.append(-1)

    # suffix fractional bound in density order over still-open items
    def bound(k: int, room: float, closed: int) -> float:
        total = 0.0
        for idx in range(k, n):
            g = group_of[idx]
            if g >= 0 and (closed >> g) & 1:
                continue
            j = order[idx]
            if C[j] <= room:
                room -= C[j]
                total += R[j]
            else:
                total += R[j] * room / C[j]
                break
        return total

    # frames: (position, remaining cap, accumulated value, cons list, closed groups)
    stack = [(0, float(cap), 0.0, None, 0)]
    best_path = None
    while stack:
        k, room, acc, path, closed = stack.pop()
        nodes.spend()
        while k < n and group_of[k] >= 0 and (closed >> group_of[k]) & 1:
            k += 1
        if k == n:
            if acc > best_value:
                best_value, best_path = acc, path
            continue
        if acc + bound(k, room, closed) <= best_value:
            continue
        j = order[k]
        g = group_of[k]
        after_skip = closed | (1 << g) if g >= 0 else closed
        stack.append((k + 1, room, acc, path, after_skip))  # skip, explored second
        if C[j] <= room:
            stack.append((k + 1, room - C[j], acc + R[j], (j, path), closed))

    if best_path is not None:
        best_set = []
        while best_path is not None:
            best_set.append(best_path[0])
            best_path = best_path[1]
    return best_value, sorted(best_set)


def solve_knapsack_bb(
    R,
    C,
    budget_usd: float,
    *,
    segment_ids: Sequence[str] | None = None,
    node_limit: int = 100_000_000,
) -> UpgradePlan:
    """Exact knapsack on unrounded costs via branch and bound.

    A density-ordered search establishes the optimal value, then a forward
    walk over the items settles the tie-break: zero-risk items are never
    selected, and among equal-value optima each item is taken whenever an
    optimal completion still allows it, which yields the lexicographically
    smallest selected index set.
    """
    R, C = _check_instance(R, C, budget_usd)
    positives = [i for i in range(len(R)) if R[i] > 0]
    nodes = _NodeBudget(node_limit)
    best_value, witness = _bnb_value(R, C, positives, budget_usd, nodes)
    density = [j for j in _density_order(R, C) if R[j] > 0]

    chosen = []
    acc = 0.0
    cap = float(budget_usd)
    in_witness = set(witness)
    for pos, i in enumerate(positives):
        if i in in_witness:
            chosen.append(i)
            acc += R[i]
            cap -= C[i]
            in_witness.discard(i)
            continue
        if C[i] > cap:
            continue
        # cheap fractional screen before an exact re-solve
        room = cap - C[i]
        frac = 0.0
        for j in density:
            if j <= i:
                continue
            if C[j] <= room:
                room -= C[j]
                frac += R[j]
            else:
                frac += R[j] * room / C[j]
                break
        if acc + R[i] + frac < best_value:
            continue
        value, completion = _bnb_value(R, C, positives[pos + 1:], cap - C[i], nodes)
        if acc + R[i] + value >= best_value:
            chosen.append(i)
            acc += R[i]
            cap -= C[i]
            in_witness = set(completion)
    return _make_plan(R, C, budget_usd, chosen, "branch_and_bound", segment_ids)


def brute_force(
    R, C, budget_usd: float, *, segment_ids: Sequence[str] | None = None
) -> UpgradePlan:
    """Exhaustively enumerate every subset; the test oracle for the solvers.

    Zero-risk items are never selected; among equal-value feasible subsets
    the lexicographically smallest index tuple wins.
    """
    R, C = _check_instance(R, C, budget_usd)
    if len(R) > 25:
        raise TooLarge(f"brute force is capped at 25 items, got {len(R)}")
    positives = [i for i in range(len(R)) if R[i] > 0]

    best_value = -1.0
    best_key = None
    for masks, values, costs in _enumerate_subsets(R[positives], C[positives]):
        feasible = costs <= budget_usd
        if not feasible.any():
            continue
        values = np.where(feasible, values, -1.0)
        top = float(values.max())
        if top < best_value:
            continue
        if top == 0.0:
            if best_value < 0.0:
                best_value, best_key = 0.0, ()
            continue
        for mask in masks[np.flatnonzero(values == top)]:
            key = tuple(
                positives[k] for k in range(len(positives)) if (int(mask) >> k) & 1
            )
            if top > best_value or (top == best_value and key < best_key):
                best_value, best_key = top, key
    return _make_plan(R, C, budget_usd, best_key or (), "brute_force", segment_ids)


def _enumerate_subsets(R, C, chunk_bits: int = 20):
    """Yield (masks, total value, total cost) arrays covering all 2^n subsets."""
    n = len(R)
    if n <= chunk_bits + 2:
        values = np.zeros(1, dtype=np.float64)
        costs = np.zeros(1, dtype=np.float64)
        for k in range(n):
            values = np.concatenate([values, values + R[k]])
            costs = np.concatenate([costs, costs + C[k]])
        yield np.arange(1 << n, dtype=np.int64), values, costs
        return
    chunk = 1 << chunk_bits
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        values = np.zeros(len(masks), dtype=np.float64)
        costs = np.zeros(len(masks), dtype=np.float64)
        for k in range(n):
            bit = ((masks >> k) & 1).astype(np.float64)
            values += R[k] * bit
            costs += C[k] * bit
        yield masks, values, costs


_SOLVER_FUNCS = {
    "dp": solve_knapsack_dp,
    "branch_and_bound": solve_knapsack_bb,
    "greedy": solve_greedy,
    "brute_force": brute_force,
}


def solve(R, C, budget_usd, solver: str = "branch_and_bound", **kwargs) -> UpgradePlan:
    """Dispatch to a solver by name."""
    if solver not in _SOLVER_FUNCS:
        raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    return _SOLVER_FUNCS[solver](R, C, budget_usd, **kwargs)


def budget_sweep(
    R,
    C,
    budgets: Sequence[float],
    solver: str = "branch_and_bound",
    *,
    segment_ids: Sequence[str] | None = None,
    **kwargs,
) -> list[SweepPoint]:
    """Solve the same instance across a nondecreasing budget schedule."""
    budgets = list(budgets)
    for a, b in zip(budgets, budgets[1:]):
        if b < a:
            raise ValueError("budgets must be nondecreasing")
    points = []
    for budget in budgets:
        plan = solve(R, C, budget, solver, segment_ids=segment_ids, **kwargs)
        points.append(
            SweepPoint(
                budget_usd=float(budget),
                removed_risk=plan.removed_risk,
                residual_risk=plan.residual_risk,
                n_selected=len(plan.selected),
            )
        )
    return points


def compare_plans(
    plans: Mapping[str, UpgradePlan], vectors: Mapping[str, RiskVector]
) -> ComparisonReport:
    """Evaluate each metric's plan under every metric's risk vector.

    Percent reduction of plan p under metric m is the share of metric-m risk
    carried by p's selected segments. Also counts exact segment matches
    between each pair of plans and across all of them.
    """
    metrics = tuple(plans.keys())
    if set(vectors.keys()) != set(metrics):
        raise ValueError("plans and vectors must cover the same metrics")
    if not metrics:
        raise ValueError("no plans to compare")

    universe = set(vectors[metrics[0]].segment_ids)
    for m in metrics:
        if set(vectors[m].segment_ids) != universe:
            raise SegmentUniverseMismatch(
                f"risk vector for {m!r} covers a different segment set"
            )
        stray = set(plans[m].selected) - universe
        if stray:
            raise SegmentUniverseMismatch(
                f"plan for {m!r} selects unknown segments: {sorted(stray)[:5]}"
            )

    reduction = {}
    for pm in metrics:
        sel = plans[pm].selected
        for em in metrics:
            vec = vectors[em]
            total = float(np.sum(vec.R))
            removed = float(
                sum(r for sid, r in zip(vec.segment_ids, vec.R) if sid in sel)
            )
            reduction[(pm, em)] = 100.0 * removed / total if total > 0 else 0.0

    pairwise = {}
    for i, m1 in enumerate(metrics):
        for m2 in metrics[i + 1:]:
            pairwise[(m1, m2)] = len(plans[m1].selected & plans[m2].selected)
    common = set(plans[metrics[0]].selected)
    for m in metrics[1:]:
        common &= plans[m].selected
    allway_pct = {
        m: 100.0 * len(common) / len(plans[m].selected) if plans[m].selected else 0.0
        for m in metrics
    }
    return ComparisonReport(
        metrics=metrics,
        n_selected={m: len(plans[m].selected) for m in metrics},
        reduction_pct=reduction,
        pairwise_matches=pairwise,
        allway_matches=len(common),
        allway_pct=allway_pct,
    )


def write_plan(
    plan: UpgradePlan,
    vector: RiskVector,
    costs: Sequence[float],
    path,
) -> None:
    """Write a plan as CSV rows plus a key=value summary block."""
    with open(path, "w", newline="") as fh:
        fh.write("segment_id,selected,R,cost_usd\n")
        for sid, r, c in zip(vector.segment_ids, vector.R, costs):
            flag = 1 if sid in plan.selected else 0
            fh.write(f"{sid},{flag},{float(r)!r},{float(c)!r}\n")
        fh.write(f"budget_usd={plan.budget_usd!r}\n")
        fh.write(f"total_cost_usd={plan.total_cost_usd!r}\n")
        fh.write(f"removed_risk={plan.removed_risk!r}\n")
        fh.write(f"residual_risk={plan.residual_risk!r}\n")
        fh.write(f"solver={plan.solver}\n")


def write_sweep(points: Sequence[SweepPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("budget_usd,removed_risk,residual_risk,n_selected\n")
        for p in points:
            fh.write(
                f"{p.budget_usd!r},{p.removed_risk!r},{p.residual_risk!r},{p.n_selected}\n"
            )
