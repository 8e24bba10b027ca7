from src.backends.base_backend import (
    BaseBackend, ColumnValues, PlanSolution, SolveOutcome, StageRecord, column_values, stage_record,
)
from src.backends.monolithic_backend import MonolithicBackend, decisions_by_stage, solve_monolithic
from src.backends.sddp_backend import SddpBackend, simulation_solution

__all__ = [
    "BaseBackend", "ColumnValues", "MonolithicBackend", "PlanSolution", "SddpBackend", "SolveOutcome",
    "StageRecord", "column_values", "decisions_by_stage", "simulation_solution", "solve_monolithic",
    "stage_record",
]
