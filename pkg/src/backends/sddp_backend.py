import logging
import time
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Tuple

import numpy as np

from src.backends.base_backend import (
    BaseBackend, ColumnGroups, PlanSolution, SolveOutcome, column_values, relative_gap, stage_record,
)
from src.formulation.model import evaluate_rows
from src.sddp.train import (
    SddpModel, SimulationResult, TrainOptions, check_stopping, load_warm_start, simulate_policy, train,
)
from src.types import ConfigurationError, RunConfig

if TYPE_CHECKING:
    from src.planner import TransitionPlanner

logger = logging.getLogger("backends.sddp")


def simulation_solution(model: SddpModel, simulation: SimulationResult, status: str, bound: float,
                        tol: float = 1e-6, integer: bool = True) -> Tuple[PlanSolution, Dict[str, float]]:
    """Stage records of every simulated path, each node re-verified on its own rows.

    Copy rows are checked against the incoming state directly since their
    right-hand sides are set per solve.
    """
    n = len(simulation.trajectories)
    records, vectors = [], []
    worst: Dict[str, float] = {}
    for i, trajectory in enumerate(simulation.trajectories):
        incoming = model.ctx.layout.zeros()
        for y, ((state, profile), x) in enumerate(zip(trajectory.samples, trajectory.solutions)):
            sub, _ = model.node(y, state, profile)
            report = evaluate_rows(sub.problem, x, tol=tol, skip=("copy", "cut"))
            report["copy"] = float(np.max(np.abs(x[sub.block.incoming] - incoming), initial=0.0))
            if not integer:
                report.pop("integrality", None)
            for tag, value in report.items():
                worst[tag] = max(worst.get(tag, 0.0), value)
            vectors.append(column_values(sub.problem, x, y, state, profile))
            records.append(stage_record(sub.problem, sub.block, x, ColumnGroups(sub.problem), scenario=i,
                                        state=state, profile=profile, probability=1.0 / n,
                                        vector=len(vectors) - 1))
            incoming = x[sub.outgoing]
    solution = PlanSolution("sddp", status, simulation.mean, bound, records, vectors)
    return solution, worst


class SddpBackend(BaseBackend):
    name = "sddp"

    def validate_config(self, config: RunConfig) -> RunConfig:
        settings = config.sddp
        if settings.stall_tolerance <= 0:
            raise ConfigurationError("sddp.stall_tolerance must be positive")
        if settings.stall_iterations < 1 or settings.max_iterations < 1:
            raise ConfigurationError("sddp.stall_iterations and sddp.max_iterations must be positive")
        if settings.simulations < 1:
            raise ConfigurationError("sddp.simulations must be positive")
        if config.workers < 1:
            raise ConfigurationError("workers must be positive")
        return config

    def train_options(self, planner: "TransitionPlanner") -> TrainOptions:
        settings = self.config.sddp
        warm_start = None
        if settings.warm_start:
            path = Path(settings.warm_start)
            if not path.is_absolute():
                path = planner.case_dir / path
            warm_start = load_warm_start(path, [c.key for c in planner.ctx.layout.components])
        return TrainOptions(
            stall_tolerance=settings.stall_tolerance,
            stall_iterations=settings.stall_iterations,
            max_iterations=settings.max_iterations,
            workers=self.config.workers,
            mode=settings.mode,
            seed=self.config.seed,
            relax_integrality=self.config.relax_integrality,
            rel_gap=self.config.rel_gap,
            lp_tol=self.config.lp_tol,
            time_limit=self.config.time_limit,
            node_limit=self.config.node_limit,
            warm_start=warm_start,
        )

    def solve(self, planner: "TransitionPlanner") -> SolveOutcome:
        start = time.perf_counter()
        model = SddpModel(planner.ctx, planner.chain, self.engine)
        options = self.train_options(planner)
        policy = train(model, options)
        status = "optimal" if check_stopping(policy.bounds(), options) else "iteration-limit"
        simulation = simulate_policy(model, policy, self.config.sddp.simulations, seed=self.config.seed,
                                     options=options)
        solution, violations = simulation_solution(model, simulation, status, policy.lower_bound,
                                                   tol=self.config.lp_tol,
                                                   integer=not self.config.relax_integrality)
        elapsed = time.perf_counter() - start
        statistics = {
            "iterations": len(policy.log),
            "cuts": policy.cut_count,
            "simulations": len(simulation.costs),
            "simulated_std": simulation.std,
            "ci_low": simulation.ci_low,
            "ci_high": simulation.ci_high,
            "state_dimension": len(model.state_keys),
        }
        return SolveOutcome("sddp", status, simulation.mean, policy.lower_bound,
                            relative_gap(simulation.mean, policy.lower_bound), elapsed, solution, policy,
                            simulation, violations, statistics)

    def describe(self) -> str:
        settings = self.config.sddp
        return (f"Markov-chain SDDP, {settings.mode} with {self.config.workers} worker(s), stall "
                f"{settings.stall_iterations}x{settings.stall_tolerance:g}, {settings.simulations} simulations")

