import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.formulation.model import BuildError, LinearProblem
from src.formulation.stage import FormulationContext, StageBlock, StageBlockBuilder, add_fixed_state
from src.scenarios.markov import MarkovChain, ScenarioTree, expand_to_tree
from src.solvers.standard_form import EQ

logger = logging.getLogger("formulation.monolithic")

NONANTICIPATIVITY_TAG = {
    "G": "41", "N": "41", "H": "41",
    "S": "42", "W": "42",
    "B": "43", "P": "43",
    "L": "44", "D": "44", "F": "44",
    "R": "45",
}


@dataclass
class MonolithicProblem:
    problem: LinearProblem
    tree: ScenarioTree
    blocks: Dict[Tuple[int, int], StageBlock] = field(default_factory=dict)
    nonanticipativity: List[int] = field(default_factory=list)

    def block(self, path: int, stage: int) -> StageBlock:
        return self.blocks[(path, stage)]

    def decision_values(self, x: np.ndarray, path: int) -> Dict[int, Dict[Tuple[str, str], float]]:
        """Per-stage decisions along one path."""
        stages = sorted(s for p, s in self.blocks if p == path)
        return {
            s: {key: float(x[col]) for key, col in self.blocks[(path, s)].decisions.items()}
            for s in stages
        }

    def cost_breakdown(self, x: np.ndarray) -> Dict[Tuple[int, int], Tuple[float, float]]:
        """(investment, operations) per (path, stage), probability-weighted."""
        return {key: (b.investment_value(x), b.operations_value(x)) for key, b in self.blocks.items()}


def build_monolithic(ctx: FormulationContext, chain: MarkovChain,
                     tree: Optional[ScenarioTree] = None) -> MonolithicProblem:
    """Extensive form: one copy of every stage block per scenario path, tied by
    non-anticipativity equalities on the transition decisions."""
    tree = tree or expand_to_tree(chain)
    if chain.n_stages != ctx.n_stages:
        raise BuildError(f"chain has {chain.n_stages} stages, horizon has {ctx.n_stages}")
    for path in tree.paths:
        if len(path.states) != chain.n_stages or any(
                not 0 <= s < len(chain.stages[y]) for y, s in enumerate(path.states)):
            raise BuildError(f"scenario path {path.states} does not fit chain '{chain.name}'")

    problem = LinearProblem(name=f"monolithic-{chain.name}")
    builder = StageBlockBuilder(ctx)
    result = MonolithicProblem(problem, tree)
    for p, path in enumerate(tree.paths):
        incoming = add_fixed_state(problem, ctx.layout, block=p)
        for y, s in enumerate(path.states):
            profiles = [(profile, profile.weight) for profile in chain.node_profiles(y, s)]
            block = builder.build(problem, y, chain.state(y, s), profiles, incoming, block=p,
                                  weight=path.probability)
            result.blocks[(p, y)] = block
            incoming = block.outgoing
    problem.objective_tags.add("1")

    for y in range(chain.n_stages):
        leaders: Dict[Tuple[int, ...], int] = {}
        for p, path in enumerate(tree.paths):
            prefix = path.states[:y + 1]
            if prefix not in leaders:
                leaders[prefix] = p
                continue
            lead = result.blocks[(leaders[prefix], y)]
            for key, col in result.blocks[(p, y)].decisions.items():
                row = problem.add_row({col: 1.0, lead.decisions[key]: -1.0}, EQ, 0.0,
                                      NONANTICIPATIVITY_TAG[key[0]])
                result.nonanticipativity.append(row)

    logger.info(f"✅ Built monolithic problem over {tree.n_paths} paths: "
                f"{problem.n_cols} columns, {problem.n_rows} rows, "
                f"{len(result.nonanticipativity)} non-anticipativity rows")
    return result
