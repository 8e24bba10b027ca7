import json
import logging
from dataclasses import asdict, dataclass

from src.action_handler import PlannerError, register_action
from src.backends.monolithic_backend import decisions_by_stage, solve_monolithic
from src.helpers import print_h_bar
from src.scenarios.markov import expand_to_tree, expected_value_chain
from src.solvers import get_engine

logger = logging.getLogger("actions.voss")


class VossError(PlannerError):
    """Raised when the expected-value problem has no plan to evaluate"""
    pass


@dataclass
class VossResult:
    rp: float
    ev: float
    eev: float

    @property
    def voss(self) -> float:
        return voss_from_values(self.rp, self.eev)

    def as_dict(self) -> dict:
        return {**asdict(self), "voss": self.voss}


def voss_from_values(rp: float, eev: float) -> float:
    return eev - rp


@register_action("voss")
def compute_voss(planner, write: bool = True, **kwargs) -> VossResult:
    """Recourse optimum, expected-value plan and that plan's expected cost.

    The expected-value chain averages every series per (stage, hour) over the
    Markov states and profiles by probability. Its stage decisions are then
    fixed in the stochastic problem, where operations are re-optimized.
    """
    config = planner.config
    engine = get_engine(config.engine)
    ctx, chain = planner.ctx, planner.chain
    if expand_to_tree(chain).n_paths < 2 and all(len(p) < 2 for p in chain.profiles.values()):
        logger.info("ℹ️ Single-scenario instance, the stochastic solution cannot add value")

    print_h_bar()
    rp = solve_monolithic(ctx, chain, config, engine, label="recourse problem")
    ev = solve_monolithic(ctx, expected_value_chain(chain, ctx.network), config, engine,
                          label="expected-value problem")
    if ev.solution is None:
        raise VossError(f"expected-value problem stopped at {ev.status} without a plan")
    eev = solve_monolithic(ctx, chain, config, engine, fixed=decisions_by_stage(ev.solution),
                           label="expected-value plan under uncertainty")
    if rp.limit_hit or eev.limit_hit:
        logger.warning("⚠️ A solve stopped at a limit; VoSS is reported from incumbents")

    result = VossResult(rp.objective, ev.objective, eev.objective)
    tolerance = max(1.0, abs(result.rp)) * max(config.rel_gap, 1e-6)
    if result.voss < -tolerance:
        logger.warning(f"⚠️ Negative VoSS {result.voss:.6g} exceeds the solver tolerance")
    logger.info(f"✅ RP={result.rp:.6g} EV={result.ev:.6g} EEV={result.eev:.6g} VoSS={result.voss:.6g}")
    if write:
        planner.output_dir.mkdir(parents=True, exist_ok=True)
        (planner.output_dir / "voss.json").write_text(json.dumps(result.as_dict(), indent=2))
    return result
