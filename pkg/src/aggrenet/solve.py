"""Desk-scale LP and MIP solving over ModelIR, plus exhaustive oracles.

``solve_lp`` runs the bounded simplex on the model as given (integrality is
ignored, so relax first unless that is intended).  ``solve_mip`` wraps it in
a best-bound branch-and-bound on the binary variables.  ``brute_force_mip``
is the independent reference: it enumerates every open/closed arc pattern
and prices the flows of each pattern by a pure LP.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import simplex
from .errors import MissingVariable, TooLarge
from .instances import Instance
from .model import EQUAL, GREATER, LESS, ModelIR

OPTIMAL = simplex.OPTIMAL
INFEASIBLE = simplex.INFEASIBLE
UNBOUNDED = simplex.UNBOUNDED
ITERATION_LIMIT = simplex.ITERATION_LIMIT
FEASIBLE = "Feasible"
LIMIT = "Limit"

GAP_EPS = 1e-9


@dataclass
class LpSolution:
    status: str
    objective: float | None
    values: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    wall_time: float = 0.0


@dataclass
class MipSolution:
    status: str
    objective: float | None
    bound: float | None
    gap: float | None
    nodes: int
    values: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    name: str
    kind: str  # "row", "lower_bound" or "upper_bound"
    amount: float


class _Arrays:
    """ModelIR flattened to the numpy form the simplex consumes."""

    def __init__(self, model: ModelIR):
        model.check()
        self.names = [v.name for v in model.variables]
        index = {n: i for i, n in enumerate(self.names)}
        n = len(self.names)
        self.c = np.array([v.obj for v in model.variables])
        self.lb = np.array([v.lb for v in model.variables])
        self.ub = np.array([v.ub for v in model.variables])
        self.integer = np.array([v.integer for v in model.variables], dtype=bool)
        # Binary and relaxed-binary columns; starting them at the upper bound
        # (all arcs open) markedly shortens phase one on fixed-charge models.
        self.start_upper = np.array(
            [v.integer or (v.lb == 0.0 and v.ub == 1.0) for v in model.variables],
            dtype=bool,
        )
        self.senses = [c.sense for c in model.constraints]
        self.b = np.array([c.rhs for c in model.constraints])
        rows, cols, data = [], [], []
        for r, con in enumerate(model.constraints):
            for var_name, coef in con.coeffs:
                rows.append(r)
                cols.append(index[var_name])
                data.append(coef)
        self.a = sparse.csc_matrix(
            (data, (rows, cols)), shape=(len(model.constraints), n)
        )


def solve_lp(model: ModelIR, tol: float = simplex.FEAS_TOL, iter_limit: int | None = None) -> LpSolution:
    """Solve the model as a pure LP.  Integrality markers are ignored."""
    arrays = _Arrays(model)
    start = time.monotonic()
    result = simplex.solve_bounded_lp(
        arrays.a, arrays.senses, arrays.b, arrays.c, arrays.lb, arrays.ub,
        feas_tol=tol, iter_limit=iter_limit, start_upper=arrays.start_upper,
    )
    elapsed = time.monotonic() - start
    values = {}
    if result.x is not None:
        values = {name: float(v) for name, v in zip(arrays.names, result.x)}
    return LpSolution(result.status, result.objective, values, result.iterations, elapsed)


def _relative_gap(incumbent: float, bound: float) -> float:
    return (incumbent - bound) / max(abs(incumbent), GAP_EPS)


def solve_mip(
    model: ModelIR,
    node_limit: int = 100_000,
    time_limit: float | None = None,
    tol: float = 1e-6,
    int_tol: float = 1e-6,
) -> MipSolution:
    """Best-bound branch and bound on the binary design variables.

    Branches on the most fractional integer variable, ties broken by the
    smallest variable index, so runs are reproducible.
    """
    arrays = _Arrays(model)
    int_idx = np.flatnonzero(arrays.integer)
    start = time.monotonic()

    def timed_out():
        return time_limit is not None and time.monotonic() - start > time_limit

    incumbent = math.inf
    incumbent_x = None
    nodes_solved = 0
    counter = 0
    # Heap entries: (parent bound, tiebreak, lb overrides, ub overrides)
    heap = [(-math.inf, 0, {}, {})]
    hit_limit = False

    while heap:
        parent_bound, _, fix_lb, fix_ub = heapq.heappop(heap)
        if parent_bound >= incumbent - GAP_EPS * max(1.0, abs(incumbent)):
            continue
        if nodes_solved >= node_limit or timed_out():
            hit_limit = True
            counter += 1
            heapq.heappush(heap, (parent_bound, counter, fix_lb, fix_ub))
            break
        nodes_solved += 1

        lb = arrays.lb.copy()
        ub = arrays.ub.copy()
        for j, v in fix_lb.items():
            lb[j] = v
        for j, v in fix_ub.items():
            ub[j] = v
        result = simplex.solve_bounded_lp(
            arrays.a, arrays.senses, arrays.b, arrays.c, lb, ub, feas_tol=tol,
            start_upper=arrays.start_upper,
        )
        if result.status != OPTIMAL:
            continue
        if result.objective >= incumbent - GAP_EPS * max(1.0, abs(incumbent)):
            continue

        frac = np.abs(result.x[int_idx] - np.round(result.x[int_idx]))
        if frac.size == 0 or frac.max() <= int_tol:
            incumbent = result.objective
            incumbent_x = result.x.copy()
            continue

        scores = np.abs(frac - 0.5)
        pick = int(int_idx[np.argmin(scores)])
        value = result.x[pick]
        counter += 1
        heapq.heappush(
            heap, (result.objective, counter, fix_lb, {**fix_ub, pick: math.floor(value)})
        )
        counter += 1
        heapq.heappush(
            heap, (result.objective, counter, {**fix_lb, pick: math.ceil(value)}, fix_ub)
        )

    open_bounds = [entry[0] for entry in heap]
    bound = min(open_bounds) if open_bounds else incumbent
    if incumbent < math.inf:
        bound = min(bound, incumbent)

    if incumbent == math.inf and not hit_limit:
        return MipSolution(INFEASIBLE, None, None, None, nodes_solved)

    values = {}
    gap = None
    if incumbent_x is not None:
        values = {name: float(v) for name, v in zip(arrays.names, incumbent_x)}
        gap = _relative_gap(incumbent, bound)

    if hit_limit:
        status = FEASIBLE if incumbent_x is not None else LIMIT
        return MipSolution(status, incumbent if incumbent_x is not None else None, bound, gap, nodes_solved, values)
    return MipSolution(OPTIMAL, incumbent, bound, gap, nodes_solved, values)


def _pattern_reaches(inst: Instance, open_arcs: list[int]) -> bool:
    succ = [[] for _ in range(inst.n_nodes)]
    for a in open_arcs:
        succ[inst.arcs[a].tail].append(inst.arcs[a].head)
    cache: dict[int, set[int]] = {}
    for c in inst.commodities:
        if c.origin not in cache:
            seen = {c.origin}
            stack = [c.origin]
            while stack:
                node = stack.pop()
                for head in succ[node]:
                    if head not in seen:
                        seen.add(head)
                        stack.append(head)
            cache[c.origin] = seen
        if c.destination not in cache[c.origin]:
            return False
    return True


def _flow_lp_value(inst: Instance, open_arcs: list[int]) -> float | None:
    """Cheapest routing of all commodities over the open arcs, or None."""
    n_open = len(open_arcs)
    n_k = len(inst.commodities)
    n_vars = n_k * n_open  # x[k * n_open + a_pos]
    rows, cols, data, senses, rhs = [], [], [], [], []
    r = 0
    for k, com in enumerate(inst.commodities):
        for node in range(inst.n_nodes):
            for pos, a in enumerate(open_arcs):
                arc = inst.arcs[a]
                if arc.tail == node:
                    rows.append(r)
                    cols.append(k * n_open + pos)
                    data.append(1.0)
                if arc.head == node:
                    rows.append(r)
                    cols.append(k * n_open + pos)
                    data.append(-1.0)
            senses.append(EQUAL)
            rhs.append(
                (com.demand if com.origin == node else 0.0)
                - (com.demand if com.destination == node else 0.0)
            )
            r += 1
    for pos, a in enumerate(open_arcs):
        for k in range(n_k):
            rows.append(r)
            cols.append(k * n_open + pos)
            data.append(1.0)
        senses.append(LESS)
        rhs.append(inst.arcs[a].capacity)
        r += 1

    a_mat = sparse.csc_matrix((data, (rows, cols)), shape=(r, n_vars))
    c = np.array([inst.arcs[a].flow_cost for a in open_arcs] * n_k)
    result = simplex.solve_bounded_lp(
        a_mat, senses, np.array(rhs), c, np.zeros(n_vars), np.full(n_vars, math.inf)
    )
    if result.status != OPTIMAL:
        return None
    return result.objective


def brute_force_mip(inst: Instance, arc_limit: int = 14) -> float:
    """Reference optimum: enumerate every open/closed arc pattern and price
    each by a pure flow LP.  Returns +inf when no pattern is feasible.

    Raises TooLarge beyond ``arc_limit`` arcs (the search is 2^|A|).
    """
    n_arcs = len(inst.arcs)
    if n_arcs > arc_limit:
        raise TooLarge(f"{n_arcs} arcs exceeds the enumeration limit {arc_limit}")
    fixed = [a.fixed_cost for a in inst.arcs]
    best = math.inf
    for pattern in range(1 << n_arcs):
        open_arcs = [a for a in range(n_arcs) if pattern >> a & 1]
        fixed_cost = sum(fixed[a] for a in open_arcs)
        if fixed_cost >= best:
            continue
        if not _pattern_reaches(inst, open_arcs):
            continue
        flow_cost = _flow_lp_value(inst, open_arcs)
        if flow_cost is None:
            continue
        best = min(best, fixed_cost + flow_cost)
    return best


def check_solution(model: ModelIR, assignment: dict[str, float], tol: float = 1e-6) -> list[Violation]:
    """Every violated row and bound of ``assignment``, with slack magnitudes.

    The assignment must cover all model variables; unknown extra names are
    ignored so richer assignments can be checked against projected models.
    """
    missing = [v.name for v in model.variables if v.name not in assignment]
    if missing:
        raise MissingVariable(f"assignment misses {len(missing)} variables, first: {missing[0]}")

    violations = []
    for v in model.variables:
        val = assignment[v.name]
        if val < v.lb - tol:
            violations.append(Violation(v.name, "lower_bound", v.lb - val))
        if val > v.ub + tol:
            violations.append(Violation(v.name, "upper_bound", val - v.ub))
    for con in model.constraints:
        lhs = sum(coef * assignment[name] for name, coef in con.coeffs)
        slack = lhs - con.rhs
        if con.sense == LESS and slack > tol:
            violations.append(Violation(con.name, "row", slack))
        elif con.sense == GREATER and slack < -tol:
            violations.append(Violation(con.name, "row", -slack))
        elif con.sense == EQUAL and abs(slack) > tol:
            violations.append(Violation(con.name, "row", abs(slack)))
    return violations
