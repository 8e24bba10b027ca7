import logging
import math
import time
from typing import TYPE_CHECKING, Dict, Optional, Tuple

import numpy as np

from src.backends.base_backend import (
    BaseBackend, ColumnGroups, PlanSolution, SolveOutcome, column_values, relative_gap, stage_record,
)
from src.formulation.model import evaluate_rows
from src.formulation.monolithic import build_monolithic
from src.formulation.stage import FormulationContext
from src.scenarios.markov import MarkovChain
from src.sddp.train import SolverError
from src.solvers import SolverEngine
from src.solvers.branch_bound import MilpStatus
from src.types import ConfigurationError, RunConfig

if TYPE_CHECKING:
    from src.planner import TransitionPlanner

logger = logging.getLogger("backends.monolithic")

# (stage, (tech, subject)) -> value
FixedDecisions = Dict[Tuple[int, Tuple[str, str]], float]


def solve_monolithic(ctx: FormulationContext, chain: MarkovChain, config: RunConfig, engine: SolverEngine,
                     fixed: Optional[FixedDecisions] = None, label: str = "RP") -> SolveOutcome:
    """Build the extensive form, solve it and read back per-path stage records.

    With `fixed`, every path's stage decisions are pinned to the given values
    and only operations are optimized.
    """
    start = time.perf_counter()
    mono = build_monolithic(ctx, chain)
    problem = mono.problem
    lp = problem.to_standard_form()
    if fixed:
        lb, ub = lp.lb.copy(), lp.ub.copy()
        for (p, y), block in mono.blocks.items():
            for key, col in block.decisions.items():
                if (y, key) not in fixed:
                    continue
                value = fixed[(y, key)]
                if problem.integer[col] and not config.relax_integrality:
                    value = round(value)
                value = min(max(value, problem.lb[col]), problem.ub[col])
                lb[col] = ub[col] = value
        lp = lp.with_bounds(lb, ub)
    if config.relax_integrality:
        lp = lp.relaxed()

    logger.info(f"🚀 Solving {label} ({problem.n_cols} columns, {problem.n_rows} rows, engine {engine.name})")
    result = engine.solve_milp(lp, rel_gap=config.rel_gap, time_limit=config.time_limit,
                               node_limit=config.node_limit, workers=config.workers, tol=config.lp_tol)
    if result.status in (MilpStatus.INFEASIBLE, MilpStatus.UNBOUNDED):
        logger.error(f"❌ {label} problem is {result.status.value}")
        raise SolverError(f"{label} problem is {result.status.value}")

    statistics = {
        "columns": problem.n_cols,
        "rows": problem.n_rows,
        "paths": mono.tree.n_paths,
        "nonanticipativity_rows": len(mono.nonanticipativity),
        "nodes": result.node_count,
    }
    elapsed = time.perf_counter() - start
    if not result.has_incumbent:
        logger.warning(f"⚠️ {label} stopped at {result.status.value} without a feasible plan, "
                       f"best bound {result.best_bound:.6g}")
        return SolveOutcome("mono", result.status.value, math.inf, result.best_bound, math.inf, elapsed,
                            statistics=statistics)

    x = result.x
    violations = evaluate_rows(problem, x, tol=config.lp_tol)
    if config.relax_integrality:
        violations.pop("integrality", None)
    groups = ColumnGroups(problem)
    records = [
        stage_record(problem, block, x, groups, scenario=p, state=mono.tree.paths[p].states[y], profile=-1,
                     probability=mono.tree.paths[p].probability)
        for (p, y), block in sorted(mono.blocks.items())
    ]
    solution = PlanSolution("mono", result.status.value, result.objective, result.best_bound,
                            records, [column_values(problem, x)])
    logger.info(f"✅ {label} objective={result.objective:.6g} bound={result.best_bound:.6g} "
                f"gap={result.gap:.2e} elapsed={elapsed:.2f}s")
    return SolveOutcome("mono", result.status.value, result.objective, result.best_bound,
                        relative_gap(result.objective, result.best_bound), elapsed, solution,
                        violations=violations, statistics=statistics)


def decisions_by_stage(solution: PlanSolution, scenario: int = 0) -> FixedDecisions:
    """Decisions of one scenario keyed for `solve_monolithic(fixed=...)`."""
    fixed: FixedDecisions = {}
    for record in solution.records:
        if record.scenario != scenario:
            continue
        for key, value in record.decisions.items():
            tech, subject = key.split(":", 1)
            fixed[(record.stage, (tech, subject))] = value
    return fixed


class MonolithicBackend(BaseBackend):
    name = "mono"

    def validate_config(self, config: RunConfig) -> RunConfig:
        if config.rel_gap < 0:
            raise ConfigurationError("rel_gap must be nonnegative")
        if config.time_limit is not None and config.time_limit <= 0:
            raise ConfigurationError("time_limit must be positive")
        if config.node_limit is not None and config.node_limit < 1:
            raise ConfigurationError("node_limit must be positive")
        return config

    def solve(self, planner: "TransitionPlanner") -> SolveOutcome:
        return solve_monolithic(planner.ctx, planner.chain, self.config, self.engine, label=planner.name)

    def describe(self) -> str:
        mode = "relaxed" if self.config.relax_integrality else f"rel_gap={self.config.rel_gap:g}"
        return f"extensive form over all scenario paths ({self.engine.name} engine, {mode})"
