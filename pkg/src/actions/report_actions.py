import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

from src.action_handler import PlannerError, register_action
from src.backends.base_backend import PlanSolution
from src.formulation.model import evaluate_rows, max_violation
from src.formulation.monolithic import build_monolithic
from src.sddp.train import SddpModel
from src.solvers import get_engine

logger = logging.getLogger("actions.report")


@dataclass
class VerificationReport:
    backend: str
    violations: Dict[str, float] = field(default_factory=dict)
    cost_mismatch: float = 0.0
    objective: float = 0.0
    recomputed: float = 0.0
    tolerance: float = 1e-6

    @property
    def worst(self):
        return max_violation(self.violations)

    @property
    def ok(self) -> bool:
        return self.worst[1] <= self.tolerance and self.cost_mismatch <= self.tolerance


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def verify_solution(planner, solution: PlanSolution, tol: float = 1e-6) -> VerificationReport:
    """Rebuild the case's problems and re-evaluate every stored column vector.

    Stage record costs and the reported objective are recomputed from the
    rebuilt cost rows and compared with relative tolerance `tol`.
    """
    report = VerificationReport(solution.backend, objective=solution.objective, tolerance=tol)
    relaxed = planner.config.relax_integrality

    def merge(found: Dict[str, float]) -> None:
        if relaxed:
            found.pop("integrality", None)
        for tag, value in found.items():
            report.violations[tag] = max(report.violations.get(tag, 0.0), value)

    if solution.backend == "mono":
        mono = build_monolithic(planner.ctx, planner.chain)
        x = solution.vectors[0].dense(mono.problem)
        merge(evaluate_rows(mono.problem, x, tol=tol))
        breakdown = mono.cost_breakdown(x)
        for r in solution.records:
            investment, operations = breakdown[(r.scenario, r.stage)]
            report.cost_mismatch = max(report.cost_mismatch,
                                       _relative(r.probability * r.total, investment + operations))
        report.recomputed = mono.problem.objective_value(x)
    else:
        model = SddpModel(planner.ctx, planner.chain, get_engine(planner.config.engine))
        totals: Dict[int, float] = {}
        for r in solution.records:
            vector = solution.vectors[r.vector]
            sub, _ = model.node(vector.stage, vector.state, vector.profile)
            x = vector.dense(sub.problem)
            merge(evaluate_rows(sub.problem, x, tol=tol, skip=("copy", "cut")))
            cost = sub.block.investment_value(x) + sub.block.operations_value(x)
            report.cost_mismatch = max(report.cost_mismatch, _relative(r.total, cost))
            totals[r.scenario] = totals.get(r.scenario, 0.0) + r.probability * cost
        report.recomputed = sum(totals.values())
    report.cost_mismatch = max(report.cost_mismatch, _relative(report.objective, report.recomputed))
    return report


@register_action("report")
def report(planner, solution_path: Optional[Union[str, Path]] = None, tol: float = 1e-6,
           write: bool = True, **kwargs) -> VerificationReport:
    path = Path(solution_path) if solution_path else planner.output_dir / "solution.json"
    if not path.exists():
        raise PlannerError(f"No solution at {path}; run 'solve' first")
    solution = PlanSolution.load(path)
    result = verify_solution(planner, solution, tol)
    tag, worst = result.worst
    if result.ok:
        logger.info(f"✅ {path}: no violation above {tol:g} (worst {worst:.2e} on '{tag}'), "
                    f"objective {result.objective:.6g} recomputed {result.recomputed:.6g}")
    else:
        logger.error(f"❌ {path}: worst violation {worst:.2e} on '{tag}', "
                     f"cost mismatch {result.cost_mismatch:.2e}")
    if write:
        out = path.parent / "verification.json"
        out.write_text(json.dumps({**asdict(result), "ok": result.ok}, indent=2))
    return result
