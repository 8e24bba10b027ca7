"""Columnar plot data.

Every file is a headed CSV with a fixed column order; a file with nothing to
report still carries its header.

    allocations.csv  stage, scenario, technology, subject, value
    costs.csv        stage, scenario, investment, operations
    curtailment.csv  stage, scenario, profile, zone, hour, curtailed, shed
    training.csv     iteration, lower_bound, elapsed
    zone_sweep.csv   zones, mean_cost, std_cost, mean_runtime, variables
    expost.csv       realization, total_cost, operating_cost, shedding, curtailment

Stages, scenarios and profiles are numbered from 1. Scenarios are scenario
paths for the monolithic backend and simulated paths for SDDP.
"""
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import pandas as pd

from src.action_handler import register_action
from src.backends.base_backend import PlanSolution, SolveOutcome
from src.sddp.policy import Policy

logger = logging.getLogger("actions.plot")

SCHEMAS: Dict[str, List[str]] = {
    "allocations": ["stage", "scenario", "technology", "subject", "value"],
    "costs": ["stage", "scenario", "investment", "operations"],
    "curtailment": ["stage", "scenario", "profile", "zone", "hour", "curtailed", "shed"],
    "training": ["iteration", "lower_bound", "elapsed"],
    "zone_sweep": ["zones", "mean_cost", "std_cost", "mean_runtime", "variables"],
    "expost": ["realization", "total_cost", "operating_cost", "shedding", "curtailment"],
}


def write_table(name: str, rows: Iterable[Sequence], directory: Union[str, Path]) -> Path:
    path = Path(directory) / f"{name}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows), columns=SCHEMAS[name]).to_csv(path, index=False)
    return path


def read_table(name: str, directory: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(Path(directory) / f"{name}.csv")


def allocation_rows(solution: PlanSolution, tol: float = 1e-9) -> List[tuple]:
    rows = []
    for r in solution.records:
        for key, value in sorted(r.decisions.items()):
            tech, subject = key.split(":", 1)
            rows.append((r.stage + 1, r.scenario + 1, tech, subject, value if abs(value) > tol else 0.0))
    return rows


def curtailment_rows(solution: PlanSolution) -> List[tuple]:
    return [
        (r.stage + 1, r.scenario + 1, c["profile"] + 1, c["zone"], c["hour"], c["curtailed"], c["shed"])
        for r in solution.records for c in r.curtailment
    ]


def training_rows(policy: Optional[Policy]) -> List[tuple]:
    if policy is None:
        return []
    return [(r.iteration, r.lower_bound, r.elapsed) for r in policy.log]


@register_action("plot-data")
def emit_plot_data(planner, outcome: Optional[SolveOutcome] = None, solution: Optional[PlanSolution] = None,
                   directory: Optional[Union[str, Path]] = None, **kwargs) -> Dict[str, Path]:
    """Write the allocation, cost, curtailment and training tables of a solve."""
    directory = Path(directory) if directory is not None else planner.output_dir
    if solution is None and outcome is not None:
        solution = outcome.solution
    if solution is None:
        logger.warning("⚠️ No solution to write plot data for")
        solution = PlanSolution("none", "none", float("nan"), float("nan"))
    written = {
        "allocations": write_table("allocations", allocation_rows(solution), directory),
        "costs": write_table("costs", [(r.stage + 1, r.scenario + 1, r.investment, r.operations)
                                       for r in solution.records], directory),
        "curtailment": write_table("curtailment", curtailment_rows(solution), directory),
        "training": write_table("training", training_rows(outcome.policy if outcome else None), directory),
    }
    logger.info(f"✅ Plot data written to {directory}")
    return written
