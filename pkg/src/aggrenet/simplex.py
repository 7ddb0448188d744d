"""Bounded-variable primal simplex over sparse constraint matrices.

Rows whose slack cannot start feasible get an artificial column; phase one
drives the artificial sum to zero, phase two optimizes the real objective
with artificials pinned at zero.  Pricing is Dantzig (most violating reduced
cost) with a Bland's-rule fallback after a long run of degenerate pivots, so
the method terminates and identical inputs replay the same pivot sequence.

The basis inverse is kept dense in Fortran order and updated in place per
pivot; the dual vector is maintained by a rank-one correction and both are
recomputed exactly before any phase is declared finished.  A per-pivot
accuracy probe triggers early refactorization, and a solve that still loses
accuracy restarts once in a slow high-accuracy mode before giving up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg.blas import dger
from threadpoolctl import threadpool_limits

from .errors import NumericalInstability

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
ITERATION_LIMIT = "IterationLimit"

FEAS_TOL = 1e-6
COST_TOL = 1e-7
RATIO_PIVOT_TOL = 1e-7
DEGENERATE_STREAK = 1000
REFACTOR_EVERY = 250
ACCURACY_TOL = 1e-7


@dataclass
class SimplexResult:
    status: str
    objective: float | None
    x: np.ndarray | None
    iterations: int


def solve_bounded_lp(
    a_matrix,
    senses,
    b,
    c,
    lb,
    ub,
    feas_tol: float = FEAS_TOL,
    cost_tol: float = COST_TOL,
    iter_limit: int | None = None,
    start_upper=None,
) -> SimplexResult:
    """Minimize c.x subject to A x (<=, =, >=) b and lb <= x <= ub.

    ``a_matrix`` is anything scipy-sparse convertible with shape (m, n);
    ``senses`` holds one of '<=', '=', '>=' per row.  ``start_upper`` marks
    columns whose nonbasic start is the upper bound instead of the lower
    (starting design variables fully open shortens phase one considerably).
    The result carries structural variable values only.
    """
    # Single-threaded BLAS: the dense kernels here are small enough that
    # thread fan-out costs far more than it saves.
    with threadpool_limits(limits=1, user_api="blas"):
        try:
            return _solve(
                a_matrix, senses, b, c, lb, ub, feas_tol, cost_tol, iter_limit,
                refactor_every=REFACTOR_EVERY, ratio_tol=RATIO_PIVOT_TOL,
                start_upper=start_upper,
            )
        except NumericalInstability:
            return _solve(
                a_matrix, senses, b, c, lb, ub, feas_tol, cost_tol, iter_limit,
                refactor_every=8, ratio_tol=1e-6, start_upper=start_upper,
            )


def _solve(a_matrix, senses, b, c, lb, ub, feas_tol, cost_tol, iter_limit,
           refactor_every, ratio_tol, start_upper=None):
    a_struct = sparse.csc_matrix(a_matrix, dtype=float)
    m, n = a_struct.shape
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if iter_limit is None:
        iter_limit = 50 * (m + n) + 2000

    if m == 0:
        x = np.where(c > 0, lb, np.where(c < 0, ub, np.where(np.isfinite(lb), lb, 0.0)))
        if not np.all(np.isfinite(x)):
            return SimplexResult(UNBOUNDED, None, None, 0)
        return SimplexResult(OPTIMAL, float(c @ x), x, 0)

    slack_lb = np.empty(m)
    slack_ub = np.empty(m)
    for i, sense in enumerate(senses):
        if sense == "<=":
            slack_lb[i], slack_ub[i] = 0.0, math.inf
        elif sense == ">=":
            slack_lb[i], slack_ub[i] = -math.inf, 0.0
        elif sense == "=":
            slack_lb[i], slack_ub[i] = 0.0, 0.0
        else:
            raise ValueError(f"unknown sense {sense!r}")

    # Nonbasic start for structurals: the finite bound nearest zero, except
    # columns flagged to start at their upper bound.
    x0 = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    if start_upper is not None:
        raise_mask = np.asarray(start_upper, dtype=bool) & np.isfinite(ub)
        x0 = np.where(raise_mask, ub, x0)
    resid = b - a_struct @ x0

    needs_art = (resid < slack_lb - feas_tol) | (resid > slack_ub + feas_tol)
    art_rows = np.flatnonzero(needs_art)
    n_art = len(art_rows)
    art_sign = np.where(resid[art_rows] >= 0.0, 1.0, -1.0)

    a_all = sparse.hstack(
        [
            a_struct,
            sparse.identity(m, format="csc"),
            sparse.csc_matrix((art_sign, (art_rows, np.arange(n_art))), shape=(m, n_art)),
        ],
        format="csc",
    )
    a_all_t = a_all.T.tocsr()
    total = n + m + n_art

    lo = np.concatenate([lb, slack_lb, np.zeros(n_art)])
    hi = np.concatenate([ub, slack_ub, np.full(n_art, math.inf)])
    cost_real = np.concatenate([c, np.zeros(m + n_art)])
    cost_art = np.concatenate([np.zeros(n + m), np.ones(n_art)])

    x = np.concatenate([x0, np.zeros(m + n_art)])
    basis = np.arange(n, n + m)
    for pos, row in enumerate(art_rows):
        basis[row] = n + m + pos
        x[n + m + pos] = abs(resid[row])
    for row in range(m):
        if not needs_art[row]:
            x[n + row] = resid[row]

    in_basis = np.zeros(total, dtype=bool)
    in_basis[basis] = True
    free = ~np.isfinite(lo) & ~np.isfinite(hi)
    at_upper = np.zeros(total, dtype=bool)
    nb = ~in_basis & ~free
    at_upper[nb] = np.isfinite(hi[nb]) & np.isclose(
        x[nb], np.where(np.isfinite(hi[nb]), hi[nb], 0.0)
    )

    if n_art:
        diag = np.ones(m)
        diag[art_rows] = art_sign
        b_inv = np.asfortranarray(np.diag(diag))  # diag(+-1) is its own inverse
    else:
        b_inv = np.asfortranarray(np.identity(m))

    state = {"iterations": 0, "since_refactor": 0, "degenerate": 0}

    def refactor():
        nonlocal b_inv
        dense_b = a_all[:, basis].toarray()
        try:
            b_inv = np.asfortranarray(np.linalg.inv(dense_b))
        except np.linalg.LinAlgError:
            raise NumericalInstability(
                f"singular basis after {state['iterations']} iterations"
            )
        x[basis] = 0.0
        x[basis] = b_inv @ (b - a_all @ x)
        if not np.all(np.isfinite(x[basis])):
            raise NumericalInstability("non-finite basic values on refactor")
        state["since_refactor"] = 0

    def ftran(j):
        start, end = a_all.indptr[j], a_all.indptr[j + 1]
        return b_inv[:, a_all.indices[start:end]] @ a_all.data[start:end]

    def run_phase(cost, phase_one):
        nonlocal b_inv
        y = b_inv.T @ cost[basis]
        y_exact = True
        while True:
            if state["iterations"] >= iter_limit:
                return ITERATION_LIMIT
            state["iterations"] += 1
            bland = state["degenerate"] >= DEGENERATE_STREAK

            reduced = cost - a_all_t @ y
            nonbasic = ~in_basis
            movable = nonbasic & (lo < hi)  # fixed variables never enter
            can_rise = movable & (~at_upper | free) & (reduced < -cost_tol)
            can_fall = movable & (at_upper | free) & (reduced > cost_tol)
            eligible = can_rise | can_fall
            if not eligible.any():
                if y_exact and state["since_refactor"] == 0:
                    return OPTIMAL
                refactor()
                y = b_inv.T @ cost[basis]
                y_exact = True
                continue

            if bland:
                entering = int(np.flatnonzero(eligible)[0])
            else:
                entering = int(np.argmax(np.where(eligible, np.abs(reduced), 0.0)))
            sigma = 1.0 if can_rise[entering] else -1.0

            direction = ftran(entering)
            move = sigma * direction
            xb = x[basis]
            lo_b = lo[basis]
            hi_b = hi[basis]
            pos_mask = move > ratio_tol
            neg_mask = move < -ratio_tol
            t_lo = np.where(pos_mask, (xb - lo_b) / move, math.inf)
            t_hi = np.where(neg_mask, (hi_b - xb) / (-move), math.inf)
            t_rows = np.maximum(np.minimum(t_lo, t_hi), 0.0)
            t_rows[~(pos_mask | neg_mask)] = math.inf
            row_min = float(t_rows.min())
            span = hi[entering] - lo[entering]
            t_flip = span if np.isfinite(span) else math.inf
            t_star = min(t_flip, row_min)

            if not np.isfinite(t_star):
                if not y_exact:
                    refactor()
                    y = b_inv.T @ cost[basis]
                    y_exact = True
                    continue
                return INFEASIBLE if phase_one else UNBOUNDED

            leave_pos = -1
            if row_min <= t_flip:
                ties = np.flatnonzero(t_rows <= row_min + 1e-12)
                if bland:
                    leave_pos = int(ties[np.argmin(basis[ties])])
                else:
                    leave_pos = int(ties[np.argmax(np.abs(move[ties]))])
                t_star = float(t_rows[leave_pos])

            state["degenerate"] = 0 if t_star > 1e-10 else state["degenerate"] + 1

            x[basis] = xb - t_star * move
            new_val = x[entering] + sigma * t_star

            if leave_pos < 0:
                at_upper[entering] = not at_upper[entering]
                x[entering] = hi[entering] if at_upper[entering] else lo[entering]
                continue

            leaving = basis[leave_pos]
            pivot = direction[leave_pos]
            u = direction / pivot
            u[leave_pos] = 0.0
            v = b_inv[leave_pos].copy()

            # Dual update: the new dual vector differs by a multiple of the
            # leaving row of the old inverse.
            beta = cost[entering] / pivot - cost[leaving] - float(cost[basis] @ u)
            y += beta * v
            y_exact = False

            hit_upper = move[leave_pos] < 0
            x[leaving] = hi[leaving] if hit_upper else lo[leaving]
            at_upper[leaving] = bool(hit_upper) and np.isfinite(hi[leaving])
            in_basis[leaving] = False
            in_basis[entering] = True
            at_upper[entering] = False
            basis[leave_pos] = entering
            x[entering] = new_val

            b_inv = dger(-1.0, u, v, a=b_inv, overwrite_a=1)
            b_inv[leave_pos] = v / pivot

            # Accuracy probe: the updated inverse must send the entering
            # column to a unit vector.
            unit = ftran(entering)
            unit[leave_pos] -= 1.0
            if float(np.max(np.abs(unit))) > ACCURACY_TOL:
                refactor()
                y = b_inv.T @ cost[basis]
                y_exact = True
                continue

            state["since_refactor"] += 1
            if state["since_refactor"] >= refactor_every:
                refactor()
                y = b_inv.T @ cost[basis]
                y_exact = True

    with np.errstate(divide="ignore", invalid="ignore"):
        if n_art:
            status = run_phase(cost_art, phase_one=True)
            if status == ITERATION_LIMIT:
                return SimplexResult(ITERATION_LIMIT, None, None, state["iterations"])
            infeas = float(np.sum(np.abs(x[n + m :])))
            scale = max(1.0, float(np.abs(b).max()))
            if status != OPTIMAL or infeas > feas_tol * scale:
                return SimplexResult(INFEASIBLE, None, None, state["iterations"])
            # Pin artificials at zero; being fixed they can never re-enter.
            hi[n + m :] = 0.0
            mask = ~in_basis[n + m :]
            x[n + m :][mask] = 0.0

        state["degenerate"] = 0
        status = run_phase(cost_real, phase_one=False)
        if status in (ITERATION_LIMIT, UNBOUNDED):
            return SimplexResult(status, None, None, state["iterations"])

        refactor()
    lo_gap = float(np.max(np.where(np.isfinite(lo), lo - x, -math.inf)))
    hi_gap = float(np.max(np.where(np.isfinite(hi), x - hi, -math.inf)))
    row_gap = float(np.max(np.abs(a_all @ x - b)))
    scale = max(1.0, float(np.abs(b).max()))
    if max(lo_gap, hi_gap) > 100 * feas_tol or row_gap > 100 * feas_tol * scale:
        raise NumericalInstability(
            f"solution violates feasibility by {max(lo_gap, hi_gap, row_gap):.3e}"
        )

    return SimplexResult(OPTIMAL, float(cost_real[:n] @ x[:n]), x[:n].copy(), state["iterations"])
