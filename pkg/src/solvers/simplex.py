import logging
from dataclasses import dataclass, replace
from enum import Enum, unique
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as splinalg

from src.solvers.standard_form import EQ, GE, LE, Basis, StandardFormLP

logger = logging.getLogger("solvers.simplex")

DEFAULT_TOL = 1e-7
PIVOT_TOL = 1e-9
DEGENERATE_STREAK = 50

# nonbasic position codes
AT_LOWER, AT_UPPER, FREE, FIXED = 0, 1, 2, 3


@unique
class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


class SimplexError(Exception):
    """Raised when the basis cannot be factorized"""


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    dual_objective: float = float("nan")
    iterations: int = 0
    basis: Optional[Basis] = None
    farkas: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Bounded-variable revised simplex over M = [A | I | diag(sign)].

    Columns 0..n-1 are structural, n..n+m-1 slacks, n+m..n+2m-1 artificials.
    The basis is refactorized every iteration; basic values are always
    recomputed from the nonbasic ones so no drift accumulates.
    """

    def __init__(self, lp: StandardFormLP, art_sign: np.ndarray, tol: float, max_iters: int):
        m, n = lp.A.shape
        self.m, self.n = m, n
        self.tol = tol
        self.max_iters = max_iters
        self.iterations = 0
        self.art_sign = art_sign.astype(float)
        self.M = sp.hstack(
            [lp.A, sp.identity(m, format="csr"), sp.diags(self.art_sign, format="csr")],
            format="csc",
        )
        self.MT = self.M.T.tocsr()
        self.b = lp.b.copy()
        slack_lb = np.where(lp.senses == GE, -np.inf, 0.0)
        slack_ub = np.where(lp.senses == LE, np.inf, 0.0)
        self.L = np.concatenate([lp.lb, slack_lb, np.zeros(m)])
        self.U = np.concatenate([lp.ub, slack_ub, np.zeros(m)])
        self.cost = np.concatenate([lp.c, np.zeros(2 * m)])
        total = n + 2 * m
        self.x = np.zeros(total)
        self.position = np.full(total, AT_LOWER, dtype=np.int8)
        self.is_basic = np.zeros(total, dtype=bool)
        self.basic = np.zeros(m, dtype=np.int64)
        self._lu = None

    # -- state helpers -------------------------------------------------
    def place_nonbasic(self, j: int, prefer_upper: bool = False) -> None:
        lo, up = self.L[j], self.U[j]
        if lo == up:
            self.position[j], self.x[j] = FIXED, lo
        elif prefer_upper and np.isfinite(up):
            self.position[j], self.x[j] = AT_UPPER, up
        elif np.isfinite(lo):
            self.position[j], self.x[j] = AT_LOWER, lo
        elif np.isfinite(up):
            self.position[j], self.x[j] = AT_UPPER, up
        else:
            self.position[j], self.x[j] = FREE, 0.0

    def set_basis(self, basic: np.ndarray) -> None:
        self.basic = np.asarray(basic, dtype=np.int64).copy()
        self.is_basic[:] = False
        self.is_basic[self.basic] = True

    def factorize(self) -> None:
        B = self.M[:, self.basic].tocsc()
        try:
            self._lu = splinalg.splu(B)
        except RuntimeError as e:
            raise SimplexError(f"Singular basis: {e}") from e

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(rhs)

    def solve_transposed(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(rhs, trans="T")

    def refresh_basic_values(self) -> None:
        x_nb = self.x.copy()
        x_nb[self.basic] = 0.0
        self.x[self.basic] = self.solve(self.b - self.M @ x_nb)

    def duals(self, cost: np.ndarray) -> np.ndarray:
        return self.solve_transposed(cost[self.basic])

    def reduced_costs(self, cost: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = cost - self.MT @ y
        d[self.basic] = 0.0
        return d

    def column(self, j: int) -> np.ndarray:
        return self.M[:, j].toarray().ravel()

    def snapshot(self) -> Basis:
        at_upper = (self.position == AT_UPPER) & ~self.is_basic
        return Basis(self.basic.copy(), at_upper, self.art_sign.copy(), self.n)

    # -- primal simplex ------------------------------------------------
    def primal(self, cost: np.ndarray) -> Tuple[LpStatus, Optional[np.ndarray]]:
        tol = self.tol
        bland = False
        streak = 0
        while True:
            if self.iterations >= self.max_iters:
                self.factorize()
                self.refresh_basic_values()
                return LpStatus.ITERATION_LIMIT, None
            self.factorize()
            self.refresh_basic_values()
            y = self.duals(cost)
            d = self.reduced_costs(cost, y)

            nonbasic = ~self.is_basic
            pos = self.position
            increase = nonbasic & (d < -tol) & ((pos == AT_LOWER) | (pos == FREE))
            decrease = nonbasic & (d > tol) & ((pos == AT_UPPER) | (pos == FREE))
            eligible = increase | decrease
            if not eligible.any():
                return LpStatus.OPTIMAL, None

            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if d[j] < 0 else -1.0

            w = self.solve(self.column(j))
            delta = -direction * w
            xb = self.x[self.basic]
            lb = self.L[self.basic]
            ub = self.U[self.basic]
            ratios = np.full(self.m, np.inf)
            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                ratios[dec] = (xb[dec] - lb[dec]) / (-delta[dec])
                ratios[inc] = (ub[inc] - xb[inc]) / delta[inc]
            ratios = np.where(np.isnan(ratios), np.inf, np.maximum(ratios, 0.0))
            t_ratio = float(ratios.min()) if self.m else np.inf
            t_flip = self.U[j] - self.L[j]

            if not np.isfinite(t_ratio) and not np.isfinite(t_flip):
                ray = np.zeros_like(self.x)
                ray[j] = direction
                ray[self.basic] = delta
                return LpStatus.UNBOUNDED, ray

            self.iterations += 1
            if t_flip <= t_ratio:
                if direction > 0:
                    self.position[j], self.x[j] = AT_UPPER, self.U[j]
                else:
                    self.position[j], self.x[j] = AT_LOWER, self.L[j]
                streak, bland = 0, False
                continue

            ties = np.flatnonzero(ratios <= t_ratio + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basic[ties])])
            else:
                r = int(ties[np.argmax(np.abs(delta[ties]))])
            leaving = int(self.basic[r])
            self.x[j] += direction * t_ratio
            if delta[r] < 0:
                self.position[leaving], self.x[leaving] = AT_LOWER, self.L[leaving]
            else:
                self.position[leaving], self.x[leaving] = AT_UPPER, self.U[leaving]
            if self.L[leaving] == self.U[leaving]:
                self.position[leaving] = FIXED
            self.basic[r] = j
            self.is_basic[leaving] = False
            self.is_basic[j] = True

            if t_ratio <= 1e-12:
                streak += 1
                if streak >= DEGENERATE_STREAK and not bland:
                    logger.debug(f"Degenerate streak of {streak} pivots, switching to Bland's rule")
                    bland = True
            else:
                streak, bland = 0, False

    # -- dual simplex --------------------------------------------------
    def is_dual_feasible(self, cost: np.ndarray) -> bool:
        self.factorize()
        y = self.duals(cost)
        d = self.reduced_costs(cost, y)
        nonbasic = ~self.is_basic
        pos = self.position
        bad = nonbasic & (
            ((pos == AT_LOWER) & (d < -self.tol))
            | ((pos == AT_UPPER) & (d > self.tol))
            | ((pos == FREE) & (np.abs(d) > self.tol))
        )
        return not bad.any()

    def dual(self, cost: np.ndarray) -> Tuple[LpStatus, Optional[np.ndarray]]:
        """Dual simplex from a dual-feasible basis; returns a Farkas vector on infeasibility."""
        tol = self.tol
        bland = False
        streak = 0
        while True:
            if self.iterations >= self.max_iters:
                return LpStatus.ITERATION_LIMIT, None
            self.factorize()
            self.refresh_basic_values()
            xb = self.x[self.basic]
            below = self.L[self.basic] - xb
            above = xb - self.U[self.basic]
            violation = np.maximum(below, above)
            if self.m == 0 or violation.max() <= tol:
                return LpStatus.OPTIMAL, None
            if bland:
                violated = np.flatnonzero(violation > tol)
                r = int(violated[np.argmin(self.basic[violated])])
            else:
                r = int(np.argmax(violation))
            raise_value = below[r] > above[r]

            e_r = np.zeros(self.m)
            e_r[r] = 1.0
            rho = self.solve_transposed(e_r)
            alpha = self.MT @ rho
            y = self.duals(cost)
            d = self.reduced_costs(cost, y)

            nonbasic = ~self.is_basic
            pos = self.position
            if raise_value:
                eligible = nonbasic & (
                    ((pos == AT_LOWER) & (alpha < -PIVOT_TOL))
                    | ((pos == AT_UPPER) & (alpha > PIVOT_TOL))
                    | ((pos == FREE) & (np.abs(alpha) > PIVOT_TOL))
                )
            else:
                eligible = nonbasic & (
                    ((pos == AT_LOWER) & (alpha > PIVOT_TOL))
                    | ((pos == AT_UPPER) & (alpha < -PIVOT_TOL))
                    | ((pos == FREE) & (np.abs(alpha) > PIVOT_TOL))
                )
            if not eligible.any():
                return LpStatus.INFEASIBLE, (-rho if raise_value else rho)

            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(eligible, np.abs(d) / np.abs(alpha), np.inf)
            step = float(ratios.min())
            if bland:
                j = int(np.flatnonzero(ratios <= step + 1e-12)[0])
            else:
                j = int(np.argmin(ratios))
            leaving = int(self.basic[r])
            if raise_value:
                self.position[leaving], self.x[leaving] = AT_LOWER, self.L[leaving]
            else:
                self.position[leaving], self.x[leaving] = AT_UPPER, self.U[leaving]
            if self.L[leaving] == self.U[leaving]:
                self.position[leaving] = FIXED
            self.basic[r] = j
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            self.iterations += 1

            if step <= 1e-12:
                streak += 1
                if streak >= DEGENERATE_STREAK and not bland:
                    logger.debug(f"Dual degenerate streak of {streak} pivots, switching to Bland's rule")
                    bland = True
            else:
                streak, bland = 0, False


@dataclass
class _Presolved:
    lp: StandardFormLP
    rows: np.ndarray
    cols: np.ndarray
    x_fixed: np.ndarray
    removed: bool
    # singleton rows folded into column bounds: the row that set each bound (-1 if none)
    lb_row: Optional[np.ndarray] = None
    ub_row: Optional[np.ndarray] = None
    coef: Optional[np.ndarray] = None

    @property
    def tightened(self) -> bool:
        return self.coef is not None and bool(np.any(self.coef != 0.0))


def _box_value(cj: float, lo: float, up: float) -> float:
    """Best value of a column that meets no row (may be infinite)."""
    if cj > 0:
        return lo
    if cj < 0:
        return up
    return lo if np.isfinite(lo) else (up if np.isfinite(up) else 0.0)


def _axis_ray(n: int, j: int, cj: float) -> np.ndarray:
    ray = np.zeros(n)
    ray[j] = 1.0 if cj < 0 else -1.0
    return ray


def _tighten_singletons(lp: StandardFormLP, keep_col: np.ndarray, keep_row: np.ndarray,
                        row_nnz: np.ndarray, b_red: np.ndarray, tol: float):
    """One pass turning rows with a single live column into bounds on that column.

    Returns tightened (lb, ub), the rows that set each bound, the folded row
    coefficients and the mask of rows to drop. A column whose bounds would
    cross keeps its rows so that infeasibility is left to the simplex.
    """
    m, n = lp.A.shape
    lb, ub = lp.lb.copy(), lp.ub.copy()
    lb_row = np.full(n, -1, dtype=np.int64)
    ub_row = np.full(n, -1, dtype=np.int64)
    coef = np.zeros(m)
    drop = np.zeros(m, dtype=bool)
    row_col = np.full(m, -1, dtype=np.int64)
    kept_cols = np.flatnonzero(keep_col)
    live = lp.A[:, keep_col].tocsr()
    for i in np.flatnonzero(keep_row & (row_nnz == 1)):
        start = live.indptr[i]
        a = float(live.data[start])
        if a == 0.0:
            continue
        j = int(kept_cols[live.indices[start]])
        bound = b_red[i] / a
        sense = lp.senses[i]
        if (sense == EQ or (sense == LE) == (a > 0)) and bound <= ub[j]:
            ub[j], ub_row[j] = bound, i
        if (sense == EQ or (sense == LE) != (a > 0)) and bound >= lb[j]:
            lb[j], lb_row[j] = bound, i
        coef[i], drop[i], row_col[i] = a, True, j

    crossed = lb > ub
    if crossed.any():
        near = crossed & (lb - ub <= tol)
        lb[near] = ub[near] = 0.5 * (lb[near] + ub[near])
        far = crossed & ~near
        lb[far], ub[far] = lp.lb[far], lp.ub[far]
        lb_row[far] = ub_row[far] = -1
        restored = drop & far[np.maximum(row_col, 0)]
        drop &= ~restored
        coef[restored] = 0.0
    return lb, ub, lb_row, ub_row, coef, drop


def _presolve(lp: StandardFormLP, tol: float):
    """Drop fixed variables, empty columns and empty rows, then fold singleton rows into bounds.

    Returns a _Presolved record, or a finished LpSolution when presolve alone
    decides the problem.
    """
    m, n = lp.A.shape
    csc = lp.A.tocsc()
    col_nnz = np.diff(csc.indptr)
    x_fixed = np.zeros(n)
    keep_col = np.ones(n, dtype=bool)

    fixed = lp.lb == lp.ub
    x_fixed[fixed] = lp.lb[fixed]
    keep_col &= ~fixed

    for j in np.flatnonzero(keep_col & (col_nnz == 0)):
        value = _box_value(lp.c[j], lp.lb[j], lp.ub[j])
        if not np.isfinite(value):
            return _finish(lp, LpStatus.UNBOUNDED, np.zeros(n), np.zeros(m), ray=_axis_ray(n, j, lp.c[j]))
        x_fixed[j] = value
        keep_col[j] = False

    b_red = lp.b - lp.A @ np.where(keep_col, 0.0, x_fixed)
    row_nnz = np.diff(lp.A[:, keep_col].tocsr().indptr) if keep_col.any() else np.zeros(m, dtype=int)
    keep_row = row_nnz > 0
    for i in np.flatnonzero(~keep_row):
        s, v = lp.senses[i], b_red[i]
        infeasible = (s == LE and v < -tol) or (s == GE and v > tol) or (s == EQ and abs(v) > tol)
        if infeasible:
            y = np.zeros(m)
            y[i] = -1.0 if v < 0 else 1.0
            return _finish(lp, LpStatus.INFEASIBLE, x_fixed, np.zeros(m), farkas=y)

    lb, ub, lb_row, ub_row, coef, drop = _tighten_singletons(lp, keep_col, keep_row, row_nnz, b_red, tol)
    keep_row &= ~drop

    rows = np.flatnonzero(keep_row)
    cols = np.flatnonzero(keep_col)
    reduced = StandardFormLP(
        c=lp.c[cols],
        A=lp.A[rows][:, cols],
        senses=lp.senses[rows],
        b=b_red[rows],
        lb=lb[cols],
        ub=ub[cols],
    )
    removed = len(rows) < m or len(cols) < n
    return _Presolved(reduced, rows, cols, x_fixed, removed, lb_row, ub_row, coef)


def _price_folded_rows(lp: StandardFormLP, pre: _Presolved, y: np.ndarray) -> None:
    """Move the reduced cost of a column resting on a folded bound onto the row that set it."""
    d = lp.c - lp.A.T @ y
    for j in np.flatnonzero((pre.lb_row >= 0) | (pre.ub_row >= 0)):
        row = pre.ub_row[j] if d[j] < 0 else (pre.lb_row[j] if d[j] > 0 else -1)
        if row >= 0:
            y[row] = d[j] / pre.coef[row]


def _finish(lp: StandardFormLP, status: LpStatus, x: np.ndarray, y: np.ndarray,
            iterations: int = 0, basis: Optional[Basis] = None,
            farkas: Optional[np.ndarray] = None, ray: Optional[np.ndarray] = None) -> LpSolution:
    """Assemble a solution for a minimization LP (sign flips for max happen in solve_lp)."""
    d = lp.c - lp.A.T @ y
    objective = float(lp.c @ x) + lp.constant
    dual_objective = float(lp.b @ y + d @ x) + lp.constant
    return LpSolution(
        status=status, x=x, duals=y, reduced_costs=d, objective=objective,
        dual_objective=dual_objective, iterations=iterations, basis=basis,
        farkas=farkas, ray=ray,
    )


def _cold_start(lp: StandardFormLP, tol: float, max_iters: int):
    m, n = lp.A.shape
    x0 = np.zeros(n)
    for j in range(n):
        lo, up = lp.lb[j], lp.ub[j]
        x0[j] = lo if np.isfinite(lo) else (up if np.isfinite(up) else 0.0)
    residual = lp.b - lp.A @ x0
    slack_lb = np.where(lp.senses == GE, -np.inf, 0.0)
    slack_ub = np.where(lp.senses == LE, np.inf, 0.0)
    absorbs = (residual >= slack_lb - tol) & (residual <= slack_ub + tol)
    art_sign = np.where(residual >= 0, 1.0, -1.0)

    tab = _Tableau(lp, art_sign, tol, max_iters)
    art_active = np.zeros(m, dtype=bool)
    basic = np.empty(m, dtype=np.int64)
    for i in range(m):
        if absorbs[i]:
            basic[i] = n + i
        else:
            basic[i] = n + m + i
            art_active[i] = True
            tab.U[n + m + i] = np.inf
    tab.set_basis(basic)
    for j in range(n + 2 * m):
        if not tab.is_basic[j]:
            tab.place_nonbasic(j)
    return tab, art_active


def _run_phases(lp: StandardFormLP, tol: float, max_iters: int) -> LpSolution:
    m, n = lp.A.shape
    tab, art_active = _cold_start(lp, tol, max_iters)

    if art_active.any():
        phase_one = np.zeros(n + 2 * m)
        phase_one[n + m:][art_active] = 1.0
        status, _ = tab.primal(phase_one)
        tab.factorize()
        tab.refresh_basic_values()
        infeasibility = float(tab.x[n + m:].sum())
        if status is LpStatus.ITERATION_LIMIT:
            return _finish(lp, status, tab.x[:n].copy(), np.zeros(m), tab.iterations)
        if infeasibility > tol * max(1.0, float(np.abs(lp.b).max(initial=0.0))):
            y = tab.duals(phase_one)
            logger.debug(f"Phase one ended with infeasibility {infeasibility:.3e}")
            return _finish(lp, LpStatus.INFEASIBLE, tab.x[:n].copy(), np.zeros(m),
                           tab.iterations, farkas=y)
        tab.U[n + m:] = 0.0
        for j in range(n + m, n + 2 * m):
            if not tab.is_basic[j]:
                tab.place_nonbasic(j)

    status, ray = tab.primal(tab.cost)
    return _conclude(lp, tab, status, ray)


def _conclude(lp: StandardFormLP, tab: _Tableau, status: LpStatus, ray: Optional[np.ndarray]) -> LpSolution:
    n, m = tab.n, tab.m
    tab.factorize()
    tab.refresh_basic_values()
    y = tab.duals(tab.cost) if m else np.zeros(0)
    x = tab.x[:n].copy()
    if status is LpStatus.OPTIMAL:
        # snap structural values sitting within rounding of a bound
        near_lb = np.isfinite(lp.lb) & (np.abs(x - lp.lb) <= 1e-11)
        near_ub = np.isfinite(lp.ub) & (np.abs(x - lp.ub) <= 1e-11)
        x[near_lb] = lp.lb[near_lb]
        x[near_ub] = lp.ub[near_ub]
    return _finish(lp, status, x, y, tab.iterations, basis=tab.snapshot(),
                   ray=None if ray is None else ray[:n])


def _warm_solve(lp: StandardFormLP, basis: Basis, tol: float, max_iters: int) -> Optional[LpSolution]:
    m, n = lp.A.shape
    if basis.n_structural != n or basis.basic.shape[0] != m:
        return None
    tab = _Tableau(lp, basis.art_sign, tol, max_iters)
    tab.set_basis(basis.basic)
    for j in range(n + 2 * m):
        if not tab.is_basic[j]:
            tab.place_nonbasic(j, prefer_upper=bool(basis.at_upper[j]))
    try:
        if not tab.is_dual_feasible(tab.cost):
            return None
        status, certificate = tab.dual(tab.cost)
        if status is LpStatus.INFEASIBLE:
            return _finish(lp, status, tab.x[:n].copy(), np.zeros(m), tab.iterations, farkas=certificate)
        if status is LpStatus.ITERATION_LIMIT:
            return None
        status, ray = tab.primal(tab.cost)
        return _conclude(lp, tab, status, ray)
    except SimplexError as e:
        logger.debug(f"Warm start abandoned: {e}")
        return None


def _solve_min(lp: StandardFormLP, tol: float, max_iters: int,
               warm_start: Optional[Basis], presolve: bool) -> LpSolution:
    if warm_start is not None:
        solution = _warm_solve(lp, warm_start, tol, max_iters)
        if solution is not None:
            return solution

    if not presolve and lp.n_rows > 0:
        return _run_phases(lp, tol, max_iters)

    pre = _presolve(lp, tol)
    if isinstance(pre, LpSolution):
        return pre
    x = pre.x_fixed.copy()
    y = np.zeros(lp.n_rows)
    if pre.lp.n_rows == 0:
        # only boxes remain: each column sits at its best bound
        for k, j in enumerate(pre.cols):
            value = _box_value(pre.lp.c[k], pre.lp.lb[k], pre.lp.ub[k])
            if not np.isfinite(value):
                return _finish(lp, LpStatus.UNBOUNDED, x, y, ray=_axis_ray(lp.n_cols, j, lp.c[j]))
            x[j] = value
        _price_folded_rows(lp, pre, y)
        return _finish(lp, LpStatus.OPTIMAL, x, y)

    inner = _run_phases(pre.lp, tol, max_iters)
    if inner.status is LpStatus.INFEASIBLE and pre.tightened:
        # the certificate must refer to the original rows, not the folded bounds
        return _run_phases(lp, tol, max_iters)
    x[pre.cols] = inner.x
    if inner.status is LpStatus.OPTIMAL:
        y[pre.rows] = inner.duals
        _price_folded_rows(lp, pre, y)
    farkas = None
    if inner.farkas is not None:
        farkas = np.zeros(lp.n_rows)
        farkas[pre.rows] = inner.farkas
    ray = None
    if inner.ray is not None:
        ray = np.zeros(lp.n_cols)
        ray[pre.cols] = inner.ray
    basis = None if pre.removed else inner.basis
    return _finish(lp, inner.status, x, y, inner.iterations, basis=basis, farkas=farkas, ray=ray)


def solve_lp(lp: StandardFormLP, tol: float = DEFAULT_TOL, max_iters: Optional[int] = None,
             warm_start: Optional[Basis] = None, presolve: bool = True) -> LpSolution:
    """Solve an LP with the bounded-variable revised simplex method.

    Args:
        lp: problem in standard form; integrality marks are ignored
        tol: primal/dual feasibility tolerance
        max_iters: pivot limit (default scales with the problem size)
        warm_start: basis of a problem with the same rows and columns; a bounded
            dual simplex restarts from it when it is still dual feasible
        presolve: drop fixed variables and empty rows/columns and fold
            single-column rows into bounds first. Disabled
            automatically when a warm start is given.

    Returns:
        LpSolution. Duals are d(objective)/d(rhs) in the sense of the original
        objective, so max problems report nonnegative duals on binding <= rows.
    """
    if max_iters is None:
        max_iters = 50 * (lp.n_rows + lp.n_cols) + 1000
    work = lp.as_minimization()
    solution = _solve_min(work, tol, max_iters, warm_start, presolve and warm_start is None)
    if lp.maximize:
        solution = replace(
            solution,
            duals=-solution.duals,
            reduced_costs=-solution.reduced_costs,
            objective=-solution.objective,
            dual_objective=-solution.dual_objective,
        )
    logger.debug(f"LP {lp.n_rows}x{lp.n_cols}: {solution.status.value} after {solution.iterations} pivots")
    return solution
