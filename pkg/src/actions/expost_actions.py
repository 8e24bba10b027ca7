import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.action_handler import PlannerError, register_action
from src.actions.plot_actions import write_table
from src.backends.base_backend import PlanSolution, StageRecord
from src.formulation.stage import FormulationContext, StageProblem, build_stage_problem
from src.scenarios.bundle import read_day_file
from src.scenarios.clustering import NoiseProfile
from src.scenarios.markov import MarkovChain
from src.sddp.train import SolverError
from src.solvers import SolverEngine, get_engine
from src.solvers.branch_bound import MilpStatus
from src.solvers.standard_form import StandardFormLP
from src.types import RunConfig

logger = logging.getLogger("actions.expost")


@dataclass
class ExpostRecord:
    realization: str
    stage: int
    state: int
    day: int
    total_cost: float
    operating_cost: float
    investment_cost: float
    shedding: float
    curtailment: float

    def row(self) -> tuple:
        return (self.realization, self.total_cost, self.operating_cost, self.shedding, self.curtailment)


class ExpostEvaluator:
    """Re-optimizes one stage's operations for a given day with the transition
    decisions and the incoming state held fixed.

    Stage problems are built once per (stage, state, day) and reused with new
    right-hand sides and bounds.
    """

    def __init__(self, ctx: FormulationContext, chain: MarkovChain, config: RunConfig,
                 engine: Optional[SolverEngine] = None):
        self.ctx = ctx
        self.chain = chain
        self.config = config
        self.engine = engine or get_engine(config.engine)
        self._cache: Dict[Tuple, Tuple[StageProblem, StandardFormLP, List[int], List[int]]] = {}

    @staticmethod
    def cache_key(stage: int, state: int, profile: NoiseProfile) -> Tuple:
        """Stage, Markov state, and the index and contents of the profile's day."""
        day = profile.day
        return stage, state, day.day_index, day.variables, day.values.tobytes()

    def _problem(self, stage: int, state: int, profile: NoiseProfile):
        key = self.cache_key(stage, state, profile)
        if key not in self._cache:
            sub = build_stage_problem(self.ctx, self.chain.state(stage, state), [(profile, 1.0)], stage,
                                      with_future=False)
            kinds = [var.kind for var in sub.problem.variables]
            shed = [c for c, k in enumerate(kinds) if k == "shed"]
            curt = [c for c, k in enumerate(kinds) if k.startswith("curt:")]
            self._cache[key] = (sub, sub.problem.to_standard_form(), shed, curt)
        return self._cache[key]

    def evaluate(self, record: StageRecord, profile: NoiseProfile, label: str) -> ExpostRecord:
        sub, base, shed, curt = self._problem(record.stage, record.state, profile)
        b = base.b.copy()
        b[sub.copy_rows] = record.incoming
        lb, ub = base.lb.copy(), base.ub.copy()
        for (tech, subject), col in sub.block.decisions.items():
            value = record.decisions.get(f"{tech}:{subject}", 0.0)
            if base.integrality[col] and not self.config.relax_integrality:
                value = round(value)
            lb[col] = ub[col] = min(max(value, sub.problem.lb[col]), sub.problem.ub[col])
        lp = base.with_rhs(b).with_bounds(lb, ub)
        if self.config.relax_integrality:
            lp = lp.relaxed()
        result = self.engine.solve_milp(lp, rel_gap=self.config.rel_gap, time_limit=self.config.time_limit,
                                        node_limit=self.config.node_limit, tol=self.config.lp_tol)
        if result.status in (MilpStatus.INFEASIBLE, MilpStatus.UNBOUNDED) or result.x is None:
            raise SolverError(f"ex-post realization {label} ended {result.status.value}")
        x = result.x
        operating = sub.block.operations_value(x)
        investment = sub.block.investment_value(x)
        return ExpostRecord(label, record.stage, record.state, profile.day.day_index, investment + operating,
                            operating, investment, float(np.sum(x[shed])), float(np.sum(x[curt])))


def _distinct(records: Sequence[StageRecord]) -> List[StageRecord]:
    """One record per (stage, state, incoming state, decisions)."""
    seen, kept = set(), []
    for r in records:
        key = (r.stage, r.state, tuple(np.round(r.incoming, 9)), tuple(sorted(
            (k, round(v, 9)) for k, v in r.decisions.items())))
        if key not in seen:
            seen.add(key)
            kept.append(r)
    return kept


def in_sample_realizations(chain: MarkovChain, records: Sequence[StageRecord]):
    for r in _distinct(records):
        for o, profile in enumerate(chain.node_profiles(r.stage, r.state)):
            yield r, profile, f"s{r.scenario + 1}-y{r.stage + 1}-o{o + 1}"


def out_of_sample_realizations(days_file: Union[str, Path], records: Sequence[StageRecord]):
    days = read_day_file(days_file)
    for r in _distinct(records):
        for index, day in days.items():
            yield r, NoiseProfile(day, 1.0), f"s{r.scenario + 1}-y{r.stage + 1}-d{index}"


@register_action("expost")
def expost_evaluate(planner, solution: Optional[PlanSolution] = None,
                    days_file: Optional[Union[str, Path]] = None, write: bool = True,
                    **kwargs) -> List[ExpostRecord]:
    """Fix a solution's transition decisions and re-optimize operations per realization.

    Without `days_file` the realizations are the in-sample profiles of every
    solved node; with it, every day of the file is played at every solved stage.
    """
    if solution is None:
        path = planner.output_dir / "solution.json"
        if not path.exists():
            raise PlannerError(f"No solution at {path}; run 'solve' first")
        solution = PlanSolution.load(path)
    evaluator = ExpostEvaluator(planner.ctx, planner.chain, planner.config)
    if days_file is None:
        realizations = in_sample_realizations(planner.chain, solution.records)
    else:
        realizations = out_of_sample_realizations(days_file, solution.records)

    results = [evaluator.evaluate(record, profile, label) for record, profile, label in realizations]
    if results:
        costs = np.array([r.total_cost for r in results])
        logger.info(f"✅ Evaluated {len(results)} realizations: mean cost {costs.mean():.6g}, "
                    f"range [{costs.min():.6g}, {costs.max():.6g}]")
    if write:
        write_table("expost", [r.row() for r in results], planner.output_dir)
    return results
