import logging
from dataclasses import dataclass
from typing import Callable, Dict

from src.solvers.branch_bound import MilpResult, MilpStatus, solve_milp
from src.solvers.simplex import LpSolution, LpStatus, solve_lp
from src.solvers.standard_form import Basis, StandardFormLP

logger = logging.getLogger("solvers")


@dataclass(frozen=True)
class SolverEngine:
    """Pair of LP and MILP entry points sharing the native result types."""
    name: str
    solve_lp: Callable[..., LpSolution]
    solve_milp: Callable[..., MilpResult]


def _highs_engine() -> SolverEngine:
    from src.solvers.highs import solve_lp_highs, solve_milp_highs
    return SolverEngine("highs", solve_lp_highs, solve_milp_highs)


_ENGINES: Dict[str, Callable[[], SolverEngine]] = {
    "native": lambda: SolverEngine("native", solve_lp, solve_milp),
    "highs": _highs_engine,
}


def get_engine(name: str = "native") -> SolverEngine:
    if name not in _ENGINES:
        raise ValueError(f"Unknown solver engine '{name}'. Available: {', '.join(sorted(_ENGINES))}")
    return _ENGINES[name]()


__all__ = [
    "Basis", "LpSolution", "LpStatus", "MilpResult", "MilpStatus", "SolverEngine",
    "StandardFormLP", "get_engine", "solve_lp", "solve_milp",
]
