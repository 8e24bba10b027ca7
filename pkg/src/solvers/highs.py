import logging
import math
import time
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from src.solvers.branch_bound import MilpResult, MilpStatus, relative_gap
from src.solvers.simplex import LpSolution, LpStatus
from src.solvers.standard_form import EQ, GE, LE, StandardFormLP

logger = logging.getLogger("solvers.highs")

_LINPROG_STATUS = {
    0: LpStatus.OPTIMAL,
    1: LpStatus.ITERATION_LIMIT,
    2: LpStatus.INFEASIBLE,
    3: LpStatus.UNBOUNDED,
}


def solve_lp_highs(lp: StandardFormLP, tol: float = 1e-7, max_iters: Optional[int] = None,
                   **_ignored) -> LpSolution:
    """LP through scipy's HiGHS interface, reported in the native result type."""
    work = lp.as_minimization()
    le = work.senses == LE
    ge = work.senses == GE
    eq = work.senses == EQ
    ub_rows = np.flatnonzero(le | ge)
    flip = np.where(ge[ub_rows], -1.0, 1.0)
    A_ub = work.A[ub_rows].multiply(flip[:, None]).tocsr() if ub_rows.size else None
    b_ub = work.b[ub_rows] * flip if ub_rows.size else None
    eq_rows = np.flatnonzero(eq)
    A_eq = work.A[eq_rows] if eq_rows.size else None
    b_eq = work.b[eq_rows] if eq_rows.size else None
    options = {"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol}
    if max_iters is not None:
        options["maxiter"] = max_iters
    res = linprog(
        work.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=np.column_stack([work.lb, work.ub]), method="highs", options=options,
    )
    status = _LINPROG_STATUS.get(res.status, LpStatus.ITERATION_LIMIT)
    y = np.zeros(work.n_rows)
    if status is LpStatus.OPTIMAL:
        if ub_rows.size:
            y[ub_rows] = res.ineqlin.marginals * flip
        if eq_rows.size:
            y[eq_rows] = res.eqlin.marginals
    x = res.x if res.x is not None else np.zeros(work.n_cols)
    d = work.c - work.A.T @ y
    objective = float(work.c @ x) + work.constant
    sign = -1.0 if lp.maximize else 1.0
    return LpSolution(
        status=status,
        x=x,
        duals=sign * y,
        reduced_costs=sign * d,
        objective=sign * objective,
        dual_objective=sign * (float(work.b @ y + d @ x) + work.constant),
        iterations=int(getattr(res, "nit", 0)),
    )


def solve_milp_highs(lp: StandardFormLP, rel_gap: float = 1e-6, time_limit: Optional[float] = None,
                     node_limit: Optional[int] = None, workers: int = 1, **_ignored) -> MilpResult:
    start = time.perf_counter()
    work = lp.as_minimization()
    lower = np.where(work.senses == LE, -np.inf, work.b)
    upper = np.where(work.senses == GE, np.inf, work.b)
    options = {"disp": False, "mip_rel_gap": rel_gap}
    if time_limit is not None:
        options["time_limit"] = time_limit
    if node_limit is not None:
        options["node_limit"] = node_limit
    constraints = [LinearConstraint(work.A, lower, upper)] if work.n_rows else []
    res = milp(
        work.c,
        integrality=work.integrality.astype(int),
        bounds=Bounds(work.lb, work.ub),
        constraints=constraints,
        options=options,
    )
    if res.status == 0:
        status = MilpStatus.OPTIMAL
    elif res.status == 2:
        status = MilpStatus.INFEASIBLE
    elif res.status == 3:
        status = MilpStatus.UNBOUNDED
    else:
        status = MilpStatus.TIME_LIMIT
    x = res.x if res.x is not None else None
    objective = float(work.c @ x) + work.constant if x is not None else math.inf
    bound = getattr(res, "mip_dual_bound", None)
    bound = objective if bound is None or not np.isfinite(bound) else float(bound) + work.constant
    bound = min(bound, objective)
    result = MilpResult(
        status=status,
        x=x,
        objective=objective,
        best_bound=bound,
        gap=relative_gap(objective, bound),
        node_count=int(getattr(res, "mip_node_count", 0) or 0),
        elapsed=time.perf_counter() - start,
        bound_log=[bound],
    )
    if lp.maximize:
        result.objective = -result.objective
        result.best_bound = -result.best_bound
        result.bound_log = [result.best_bound]
    logger.debug(f"HiGHS MILP {status.value} obj={result.objective:.6g} nodes={result.node_count}")
    return result
