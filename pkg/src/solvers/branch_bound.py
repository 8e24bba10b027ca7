import heapq
import itertools
import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum, unique
from typing import Dict, List, Optional

import numpy as np

from src.solvers.simplex import DEFAULT_TOL, LpStatus, solve_lp
from src.solvers.standard_form import Basis, StandardFormLP

logger = logging.getLogger("solvers.branch_bound")

INT_TOL = 1e-6
LOG_EVERY = 200


@unique
class MilpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time-limit"
    NODE_LIMIT = "node-limit"

    @property
    def is_limit(self) -> bool:
        return self in (MilpStatus.TIME_LIMIT, MilpStatus.NODE_LIMIT)


@dataclass
class MilpResult:
    status: MilpStatus
    x: Optional[np.ndarray]
    objective: float
    best_bound: float
    gap: float
    node_count: int
    elapsed: float
    bound_log: List[float] = field(default_factory=list)

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


def relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent) or not math.isfinite(bound):
        return math.inf
    return max(0.0, (incumbent - bound) / max(1.0, abs(incumbent)))


@dataclass(order=True)
class _Node:
    bound: float
    node_id: int
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)
    basis: Optional[Basis] = field(compare=False, default=None)
    depth: int = field(compare=False, default=0)


class _TreeSearch:
    """Best-first branch and bound over a minimization LP with integrality marks.

    The open-node heap and the incumbent are shared between workers. A worker
    pops the best node, solves it warm-started from the parent basis, and pushes
    children; the incumbent is replaced only by a strictly better objective.
    """

    def __init__(self, lp: StandardFormLP, rel_gap: float, time_limit: Optional[float],
                 node_limit: Optional[int], tol: float):
        self.lp = lp
        self.rel_gap = rel_gap
        self.time_limit = time_limit
        self.node_limit = node_limit
        self.tol = tol
        self.int_idx = np.flatnonzero(lp.integrality)
        self.start = time.perf_counter()

        self.heap: List[_Node] = []
        self.ids = itertools.count()
        self.lock = threading.Condition()
        self.active = 0
        self.nodes = 0
        self.incumbent: Optional[np.ndarray] = None
        self.incumbent_obj = math.inf
        self.best_bound = -math.inf
        self.bound_log: List[float] = []
        self.unbounded = False
        self.stop_reason: Optional[MilpStatus] = None
        self._processing: Dict[int, float] = {}

    # -- shared-state helpers -----------------------------------------
    def _open_bound(self) -> float:
        bounds = [node.bound for node in self.heap]
        bounds.extend(self._processing.values())
        return min(bounds) if bounds else self.incumbent_obj

    def _record_bound(self) -> None:
        bound = self._open_bound()
        if bound > self.best_bound:
            self.best_bound = bound
        self.bound_log.append(self.best_bound)

    def _prune_threshold(self) -> float:
        if not math.isfinite(self.incumbent_obj):
            return math.inf
        slack = max(self.rel_gap * max(1.0, abs(self.incumbent_obj)), 1e-9 * max(1.0, abs(self.incumbent_obj)))
        return self.incumbent_obj - slack

    def offer(self, x: np.ndarray, objective: float) -> bool:
        """Atomic compare-and-improve on the incumbent."""
        with self.lock:
            if objective < self.incumbent_obj - 1e-12:
                self.incumbent = x.copy()
                self.incumbent_obj = objective
                logger.debug(f"New incumbent {objective:.6g} after {self.nodes} nodes")
                return True
            return False

    def _limit_hit(self) -> Optional[MilpStatus]:
        if self.time_limit is not None and time.perf_counter() - self.start > self.time_limit:
            return MilpStatus.TIME_LIMIT
        if self.node_limit is not None and self.nodes >= self.node_limit:
            return MilpStatus.NODE_LIMIT
        return None

    def _gap_closed(self) -> bool:
        return relative_gap(self.incumbent_obj, self._open_bound()) <= self.rel_gap

    # -- node processing -----------------------------------------------
    def _solve_node(self, node: _Node):
        relaxed = self.lp.with_bounds(node.lb, node.ub)
        return solve_lp(relaxed, tol=self.tol, warm_start=node.basis, presolve=False)

    def _integral(self, x: np.ndarray) -> bool:
        if self.int_idx.size == 0:
            return True
        xi = x[self.int_idx]
        return bool(np.all(np.abs(xi - np.round(xi)) <= INT_TOL))

    def _branch_index(self, x: np.ndarray) -> int:
        """Most fractional integer variable; lowest index wins ties."""
        xi = x[self.int_idx]
        frac = np.abs(xi - np.floor(xi) - 0.5)
        fractional = np.abs(xi - np.round(xi)) > INT_TOL
        frac = np.where(fractional, frac, np.inf)
        return int(self.int_idx[int(np.argmin(frac))])

    def _try_rounding(self, x: np.ndarray, node: _Node) -> None:
        rounded = np.clip(np.round(x[self.int_idx]), node.lb[self.int_idx], node.ub[self.int_idx])
        lb = node.lb.copy()
        ub = node.ub.copy()
        lb[self.int_idx] = rounded
        ub[self.int_idx] = rounded
        trial = solve_lp(self.lp.with_bounds(lb, ub), tol=self.tol)
        if trial.is_optimal:
            x = trial.x.copy()
            x[self.int_idx] = rounded
            self.offer(x, self.lp.objective_value(x))

    def process(self, node: _Node) -> List[_Node]:
        solution = self._solve_node(node)
        if solution.status is LpStatus.INFEASIBLE:
            return []
        if solution.status is LpStatus.UNBOUNDED:
            with self.lock:
                self.unbounded = True
            return []
        if solution.status is not LpStatus.OPTIMAL:
            logger.warning(f"Node {node.node_id} LP stopped with status {solution.status.value}")
            return []

        objective = solution.objective
        with self.lock:
            threshold = self._prune_threshold()
        if objective >= threshold:
            return []

        x = solution.x
        if self._integral(x):
            x = x.copy()
            x[self.int_idx] = np.round(x[self.int_idx])
            self.offer(x, self.lp.objective_value(x))
            return []

        if node.depth == 0:
            self._try_rounding(x, node)

        j = self._branch_index(x)
        value = x[j]
        down_ub = node.ub.copy()
        down_ub[j] = math.floor(value)
        up_lb = node.lb.copy()
        up_lb[j] = math.ceil(value)
        children = []
        with self.lock:
            children.append(_Node(objective, next(self.ids), node.lb, down_ub, solution.basis, node.depth + 1))
            children.append(_Node(objective, next(self.ids), up_lb, node.ub, solution.basis, node.depth + 1))
        return children

    # -- worker loop ---------------------------------------------------
    def work(self, worker: int) -> None:
        while True:
            with self.lock:
                while True:
                    threshold = self._prune_threshold()
                    while self.heap and self.heap[0].bound >= threshold:
                        heapq.heappop(self.heap)
                    if self.heap or self.active == 0 or self.stop_reason is not None:
                        break
                    self.lock.wait()
                if self.stop_reason is not None or not self.heap:
                    self.lock.notify_all()
                    return
                if self.unbounded:
                    self.stop_reason = MilpStatus.UNBOUNDED
                    self.lock.notify_all()
                    return
                limit = self._limit_hit()
                if limit is not None:
                    self.stop_reason = limit
                    self.lock.notify_all()
                    return
                if math.isfinite(self.incumbent_obj) and self._gap_closed():
                    self.stop_reason = MilpStatus.OPTIMAL
                    self.lock.notify_all()
                    return
                node = heapq.heappop(self.heap)
                self._processing[worker] = node.bound
                self.active += 1
                self.nodes += 1
                count = self.nodes

            try:
                children = self.process(node)
            finally:
                with self.lock:
                    self.active -= 1
                    del self._processing[worker]
                    threshold = self._prune_threshold()
                    for child in children:
                        if child.bound < threshold:
                            heapq.heappush(self.heap, child)
                    self._record_bound()
                    if count % LOG_EVERY == 1:
                        logger.info(
                            f"nodes={count} bound={self.best_bound:.6g} "
                            f"incumbent={self.incumbent_obj:.6g} "
                            f"gap={relative_gap(self.incumbent_obj, self.best_bound):.3e}"
                        )
                    self.lock.notify_all()

    def run(self, workers: int) -> MilpResult:
        root = _Node(-math.inf, next(self.ids), self.lp.lb.copy(), self.lp.ub.copy())
        self.heap.append(root)
        if workers <= 1:
            self.work(0)
        else:
            with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="bnb") as pool:
                for future in [pool.submit(self.work, w) for w in range(workers)]:
                    future.result()
        return self._result()

    def _result(self) -> MilpResult:
        elapsed = time.perf_counter() - self.start
        if self.unbounded:
            status = MilpStatus.UNBOUNDED
        elif self.stop_reason is not None and self.stop_reason.is_limit:
            status = self.stop_reason
        elif self.incumbent is None:
            status = MilpStatus.INFEASIBLE
        else:
            status = MilpStatus.OPTIMAL

        if status is MilpStatus.OPTIMAL and not self.heap:
            bound = self.incumbent_obj
        elif self.heap:
            bound = min(node.bound for node in self.heap)
        else:
            bound = self.incumbent_obj
        bound = min(max(bound, self.best_bound), self.incumbent_obj)
        self.best_bound = bound
        gap = relative_gap(self.incumbent_obj, bound)
        logger.info(
            f"nodes={self.nodes} bound={bound:.6g} incumbent={self.incumbent_obj:.6g} "
            f"gap={gap:.3e} status={status.value}"
        )
        return MilpResult(
            status=status,
            x=self.incumbent,
            objective=self.incumbent_obj,
            best_bound=bound,
            gap=gap,
            node_count=self.nodes,
            elapsed=elapsed,
            bound_log=self.bound_log,
        )


def solve_milp(lp: StandardFormLP, rel_gap: float = 1e-6, time_limit: Optional[float] = None,
               node_limit: Optional[int] = None, workers: int = 1, tol: float = DEFAULT_TOL) -> MilpResult:
    """Solve a MILP by best-first branch and bound on the simplex kernel.

    Objective, incumbent and bound are reported in the sense of the input LP
    (a maximization returns its bound as an upper bound).
    """
    start = time.perf_counter()
    work = lp.as_minimization()

    if not work.has_integers:
        solution = solve_lp(work, tol=tol)
        if solution.status is LpStatus.OPTIMAL:
            status, x, obj = MilpStatus.OPTIMAL, solution.x, solution.objective
        elif solution.status is LpStatus.UNBOUNDED:
            status, x, obj = MilpStatus.UNBOUNDED, None, -math.inf
        elif solution.status is LpStatus.INFEASIBLE:
            status, x, obj = MilpStatus.INFEASIBLE, None, math.inf
        else:
            status, x, obj = MilpStatus.NODE_LIMIT, None, math.inf
        result = MilpResult(status, x, obj, obj, 0.0 if x is not None else math.inf, 1,
                            time.perf_counter() - start, [obj])
    else:
        result = _TreeSearch(work, rel_gap, time_limit, node_limit, tol).run(max(1, workers))

    if lp.maximize:
        result.objective = -result.objective
        result.best_bound = -result.best_bound
        result.bound_log = [-b for b in result.bound_log]
    return result
