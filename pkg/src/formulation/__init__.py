from src.formulation.costs import investment_coefficient, row_investment_cost, stage_investment_cost
from src.formulation.export import read_lpt, write_lpt
from src.formulation.linearize import (
    LineRatings, link_product, linearize_line_capacity, linearize_sssc, sssc_big_m,
)
from src.formulation.model import (
    PLUMBING_TAGS, BuildError, ConstraintRecord, LinearProblem, VariableIndex, evaluate_rows, max_violation,
)
from src.formulation.monolithic import MonolithicProblem, build_monolithic
from src.formulation.stage import (
    FormulationContext, StageBlock, StageBlockBuilder, StageProblem, add_copy_state, add_fixed_state,
    build_stage_problem,
)
from src.formulation.state import StateComponent, StateLayout, build_state_layout, window_length

__all__ = [
    "BuildError", "ConstraintRecord", "FormulationContext", "LineRatings", "LinearProblem", "MonolithicProblem",
    "PLUMBING_TAGS", "StageBlock", "StageBlockBuilder", "StageProblem", "StateComponent", "StateLayout",
    "VariableIndex", "add_copy_state", "add_fixed_state", "build_monolithic", "build_stage_problem",
    "build_state_layout", "evaluate_rows", "investment_coefficient", "link_product", "linearize_line_capacity",
    "linearize_sssc", "max_violation", "read_lpt", "row_investment_cost", "sssc_big_m", "stage_investment_cost",
    "window_length", "write_lpt",
]
