import json
import logging
import math
from abc import ABC, abstractmethod
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Tuple, Union

import numpy as np

from src.formulation.model import LinearProblem
from src.formulation.stage import StageBlock
from src.sddp.policy import Policy
from src.sddp.train import SimulationResult
from src.solvers import SolverEngine, get_engine
from src.types import RunConfig

if TYPE_CHECKING:
    from src.planner import TransitionPlanner

logger = logging.getLogger("backends")

LIMIT_STATUSES = ("time-limit", "node-limit", "iteration-limit")
# values below this are not written to solution files
VALUE_EPS = 1e-12


@dataclass
class StageRecord:
    """One solved stage along one scenario.

    Costs are per scenario (not probability-weighted); `vector` points at the
    column values the record was read from.
    """
    scenario: int
    stage: int
    state: int
    profile: int
    probability: float
    investment: float
    operations: float
    incoming: List[float]
    decisions: Dict[str, float]
    curtailment: List[Dict[str, Any]] = field(default_factory=list)
    vector: int = 0

    @property
    def total(self) -> float:
        return self.investment + self.operations


@dataclass
class ColumnValues:
    """Nonzero column values of one solved problem, keyed by column name."""
    stage: int
    state: int
    profile: int
    values: Dict[str, float]

    def dense(self, problem: LinearProblem) -> np.ndarray:
        x = np.zeros(problem.n_cols)
        for col, var in enumerate(problem.variables):
            x[col] = self.values.get(str(var), 0.0)
        return x


@dataclass
class PlanSolution:
    backend: str
    status: str
    objective: float
    best_bound: float
    records: List[StageRecord] = field(default_factory=list)
    vectors: List[ColumnValues] = field(default_factory=list)

    @property
    def stages(self) -> List[int]:
        return sorted({r.stage for r in self.records})

    def expected_cost(self) -> float:
        return float(sum(r.probability * r.total for r in self.records))

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=1))
        logger.info(f"✅ Saved solution with {len(self.records)} stage records to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PlanSolution":
        data = json.loads(Path(path).read_text())
        return cls(
            backend=data["backend"],
            status=data["status"],
            objective=float(data["objective"]),
            best_bound=float(data["best_bound"]),
            records=[StageRecord(**r) for r in data.get("records", [])],
            vectors=[ColumnValues(**v) for v in data.get("vectors", [])],
        )


@dataclass
class SolveOutcome:
    backend: str
    status: str
    objective: float
    best_bound: float
    gap: float
    elapsed: float
    solution: Optional[PlanSolution] = None
    policy: Optional[Policy] = None
    simulation: Optional[SimulationResult] = None
    violations: Dict[str, float] = field(default_factory=dict)
    statistics: Dict[str, Any] = field(default_factory=dict)

    @property
    def limit_hit(self) -> bool:
        return self.status in LIMIT_STATUSES

    @property
    def max_violation(self) -> float:
        return max(self.violations.values(), default=0.0)

    def summary(self) -> Dict[str, Any]:
        return {
            "backend": self.backend,
            "status": self.status,
            "objective": self.objective,
            "best_bound": self.best_bound,
            "gap": self.gap,
            "elapsed": self.elapsed,
            "max_violation": self.max_violation,
            "violations": self.violations,
            "statistics": self.statistics,
        }


class ColumnGroups:
    """Operating columns of interest grouped by (stage, block)."""

    KINDS = ("shed", "curt:S", "curt:W")

    def __init__(self, problem: LinearProblem):
        self.groups: Dict[Tuple[int, int], List[int]] = defaultdict(list)
        for col, var in enumerate(problem.variables):
            if var.kind in self.KINDS:
                self.groups[(var.stage, var.block)].append(col)

    def of(self, block: StageBlock) -> List[int]:
        return self.groups.get((block.stage, block.block), [])


def column_values(problem: LinearProblem, x: np.ndarray, stage: int = -1, state: int = -1,
                  profile: int = -1) -> ColumnValues:
    values = {str(var): float(x[col]) for col, var in enumerate(problem.variables) if abs(x[col]) > VALUE_EPS}
    return ColumnValues(stage, state, profile, values)


def stage_record(problem: LinearProblem, block: StageBlock, x: np.ndarray, groups: ColumnGroups,
                 scenario: int, state: int, profile: int, probability: float, vector: int = 0,
                 tol: float = 1e-9) -> StageRecord:
    """Read one stage block out of a solved vector.

    Block costs carry the scenario probability; they are divided back out so
    the record holds per-scenario values.
    """
    scale = 1.0 / probability if probability > 0 else 0.0
    curtailment = []
    for col in groups.of(block):
        value = float(x[col])
        if value <= tol:
            continue
        var = problem.variables[col]
        shed = var.kind == "shed"
        curtailment.append({
            "profile": var.profile if profile < 0 else profile,
            "zone": var.subject,
            "hour": var.hour,
            "curtailed": 0.0 if shed else value,
            "shed": value if shed else 0.0,
        })
    return StageRecord(
        scenario=scenario,
        stage=block.stage,
        state=state,
        profile=profile,
        probability=probability,
        investment=block.investment_value(x) * scale,
        operations=block.operations_value(x) * scale,
        incoming=[float(x[c]) for c in block.incoming],
        decisions={f"{tech}:{subject}": float(x[col]) for (tech, subject), col in block.decisions.items()},
        curtailment=curtailment,
        vector=vector,
    )


def relative_gap(objective: float, bound: float) -> float:
    if not (math.isfinite(objective) and math.isfinite(bound)):
        return math.inf
    return max(0.0, (objective - bound) / max(1.0, abs(objective)))


class BaseBackend(ABC):
    name = "base"

    def __init__(self, config: RunConfig):
        try:
            self.config = self.validate_config(config)
            self.engine: SolverEngine = get_engine(self.config.engine)
        except Exception as e:
            logging.error(f"Could not initialize the {self.name} backend")
            raise e

    @abstractmethod
    def validate_config(self, config: RunConfig) -> RunConfig:
        """
        Check the solver settings this backend relies on.

        Returns:
            RunConfig: the config if valid

        Raises:
            ConfigurationError if a setting is out of range
        """

    @abstractmethod
    def solve(self, planner: "TransitionPlanner") -> SolveOutcome:
        """Build, solve and re-verify the planner's instance."""

    @abstractmethod
    def describe(self) -> str:
        pass
