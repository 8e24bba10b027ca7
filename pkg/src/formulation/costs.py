from typing import Dict, Optional

from src.formulation.model import BuildError
from src.scenarios.markov import MarkovState
from src.types import ROW_TECHS, TECHNOLOGIES, TechnologyCatalog, TechnologyCost


def investment_coefficient(cost: TechnologyCost, stage: int, n_stages: int, years_per_stage: float,
                           cost_scale: float = 1.0, length: float = 0.0,
                           capex_override: Optional[float] = None) -> float:
    """(CapEx + F^a * Y^s * R_y) * zeta, with R_y the stages left including this one.

    Stages are 1-based here. Length only applies to right-of-way technologies.
    """
    remaining = n_stages - stage + 1
    if remaining < 1:
        raise BuildError(f"stage {stage} lies beyond the {n_stages}-stage horizon")
    capex = cost.capex if capex_override is None else capex_override
    capex += cost.capex_per_km * length
    return (capex + cost.fixed_om * years_per_stage * remaining) * cost_scale


def stage_investment_cost(catalog: TechnologyCatalog, stage: int, state: MarkovState, n_stages: int,
                          years_per_stage: float) -> Dict[str, float]:
    """Per-technology investment coefficients at a 1-based stage for every
    catalogued technology, excluding length-dependent terms of right-of-way
    technologies."""
    return {
        tech: investment_coefficient(catalog.cost(tech), stage, n_stages, years_per_stage,
                                     state.cost_scale(tech))
        for tech in TECHNOLOGIES if tech in catalog.technologies
    }


def row_investment_cost(catalog: TechnologyCatalog, tech: str, length: float, stage: int, state: MarkovState,
                        n_stages: int, years_per_stage: float) -> float:
    if tech not in ROW_TECHS:
        raise BuildError(f"{tech} is not a right-of-way technology")
    return investment_coefficient(catalog.cost(tech), stage, n_stages, years_per_stage,
                                  state.cost_scale(tech), length=length)
