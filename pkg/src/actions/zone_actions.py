import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.action_handler import register_action
from src.actions.plot_actions import write_table
from src.backends.monolithic_backend import solve_monolithic
from src.formulation.stage import FormulationContext
from src.helpers import print_h_bar
from src.solvers import get_engine

logger = logging.getLogger("actions.zones")


@dataclass
class ZoneSample:
    zones: int
    repetition: int
    cost: float
    runtime: float
    variables: int


@dataclass
class ZoneSweepRow:
    zones: int
    mean_cost: float
    std_cost: float
    mean_runtime: float
    variables: float

    def row(self) -> tuple:
        return (self.zones, self.mean_cost, self.std_cost, self.mean_runtime, self.variables)


def summarize(samples: Sequence[ZoneSample]) -> List[ZoneSweepRow]:
    rows = []
    for n in sorted({s.zones for s in samples}):
        group = [s for s in samples if s.zones == n]
        costs = np.array([s.cost for s in group])
        rows.append(ZoneSweepRow(
            zones=n,
            mean_cost=float(costs.mean()),
            std_cost=float(costs.std(ddof=1)) if len(costs) > 1 else 0.0,
            mean_runtime=float(np.mean([s.runtime for s in group])),
            variables=float(np.mean([s.variables for s in group])),
        ))
    return rows


@register_action("zones")
def zone_sweep(planner, sizes: Optional[Sequence[int]] = None, repetitions: Optional[int] = None,
               seed: Optional[int] = None, write: bool = True, **kwargs) -> List[ZoneSweepRow]:
    """Re-solve the case on random subsets of its VRES zones.

    Each repetition draws one permutation of the zones and keeps its first N
    for every N, so the subsets of one repetition are nested.
    """
    config = planner.config
    sizes = sorted(sizes or config.zone_sweep_sizes)
    repetitions = repetitions or config.zone_sweep_repetitions
    rng = np.random.default_rng(config.seed if seed is None else seed)
    engine = get_engine(config.engine)
    zones = list(planner.network.zones)
    if sizes[-1] > len(zones):
        logger.warning(f"⚠️ The case has {len(zones)} zones; larger sizes are capped")

    samples: List[ZoneSample] = []
    for r in range(repetitions):
        order = rng.permutation(len(zones))
        for n in sizes:
            subset = [zones[i] for i in order[:min(n, len(zones))]]
            network = planner.network.model_copy(update={"zones": subset})
            ctx = FormulationContext.create(network, planner.catalog, planner.horizon, planner.enabled)
            start = time.perf_counter()
            outcome = solve_monolithic(ctx, planner.chain, config, engine, label=f"{n} zones, repetition {r + 1}")
            samples.append(ZoneSample(n, r, outcome.objective, time.perf_counter() - start,
                                      outcome.statistics["columns"]))
        logger.info(f"⏳ repetition={r + 1}/{repetitions}")

    rows = summarize(samples)
    print_h_bar()
    for row in rows:
        logger.info(f"N={row.zones:<6} mean={row.mean_cost:.6g} std={row.std_cost:.3g} "
                    f"runtime={row.mean_runtime:.2f}s variables={row.variables:.0f}")
    if write:
        write_table("zone_sweep", [row.row() for row in rows], planner.output_dir)
    return rows
