import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.formulation.costs import investment_coefficient
from src.formulation.linearize import LineRatings, link_product, linearize_line_capacity, linearize_sssc, sssc_big_m
from src.formulation.model import BuildError, LinearProblem, VariableIndex
from src.formulation.state import LIFETIME_TAG, StateLayout, build_state_layout, row_has_line, sssc_units
from src.scenarios.clustering import NoiseProfile
from src.scenarios.markov import MarkovState
from src.solvers.standard_form import EQ, GE, LE
from src.types import (
    ROTARY_TECHS, ROW_TECHS, TECHNOLOGIES, Network, PlanningHorizon, RightOfWay, TechnologyCatalog, VresZone,
)

logger = logging.getLogger("formulation.stage")

INVESTMENT_TAGS = ("2", "67", "68")
OPERATION_TAGS = ("3",)

# cycle-degradation lines (slope over SOC^max, intercept) per hour
DEGRADATION_LINES = ((-0.00102, 0.00051, "29a"), (-0.000151, 0.00015, "29b"))


@dataclass
class FormulationContext:
    """Everything a stage block needs besides the Markov state and the profiles."""
    network: Network
    catalog: TechnologyCatalog
    horizon: PlanningHorizon
    enabled: FrozenSet[str]
    layout: StateLayout

    @classmethod
    def create(cls, network: Network, catalog: TechnologyCatalog, horizon: PlanningHorizon,
               enabled: Optional[Iterable[str]] = None) -> "FormulationContext":
        enabled = frozenset(TECHNOLOGIES if enabled is None else enabled)
        return cls(network, catalog, horizon, enabled, build_state_layout(network, catalog, horizon, enabled))

    @property
    def n_stages(self) -> int:
        return self.horizon.n_stages

    @property
    def voll(self) -> float:
        return self.horizon.voll_per_mwh * self.network.units.base_mva

    def curtailment_penalty(self, tech: str) -> float:
        explicit = self.horizon.curtailment_penalty_solar if tech == "S" else self.horizon.curtailment_penalty_wind
        if explicit is not None:
            return explicit
        fuel = [g.cost_pre for g in self.network.generators if g.cost_pre > 0]
        fuel += [self.catalog.cost(t).variable_cost for t in ROTARY_TECHS
                 if t in self.enabled and self.catalog.cost(t).variable_cost > 0]
        return 0.95 * min(fuel) if fuel else 0.0


@dataclass
class StageBlock:
    """Columns of one stage block inside a LinearProblem."""
    stage: int
    block: int
    incoming: List[int]
    outgoing: List[int]
    decisions: Dict[Tuple[str, str], int] = field(default_factory=dict)
    investment: Dict[int, float] = field(default_factory=dict)
    operations: Dict[int, float] = field(default_factory=dict)

    def investment_value(self, x: np.ndarray) -> float:
        return float(sum(c * x[j] for j, c in self.investment.items()))

    def operations_value(self, x: np.ndarray) -> float:
        return float(sum(c * x[j] for j, c in self.operations.items()))


def add_fixed_state(problem: LinearProblem, layout: StateLayout, block: int = 0,
                    values: Optional[np.ndarray] = None) -> List[int]:
    """Incoming state columns pinned to given values (zero when omitted)."""
    values = layout.zeros() if values is None else np.asarray(values, dtype=float)
    cols = []
    for comp, value in zip(layout.components, values):
        col = problem.add_var(VariableIndex("state0", comp.key, block=block), -math.inf, math.inf)
        problem.fix(col, value, "initial")
        cols.append(col)
    return cols


def add_copy_state(problem: LinearProblem, layout: StateLayout, stage: int) -> Tuple[List[int], List[int]]:
    """Free copy columns tied to the right-hand sides of `copy` rows."""
    cols, rows = [], []
    for comp in layout.components:
        col = problem.add_var(VariableIndex("copy", comp.key, stage), -math.inf, math.inf)
        cols.append(col)
        rows.append(problem.add_row({col: 1.0}, EQ, 0.0, "copy"))
    return cols, rows


class StageBlockBuilder:
    """Adds the investment and operating variables and rows of one stage to a problem.

    Operations read the incoming state; connection, area, lifetime and
    line-dependency limits act on the outgoing state.
    """

    def __init__(self, ctx: FormulationContext):
        self.ctx = ctx
        self.net = ctx.network
        self.catalog = ctx.catalog
        self.horizon = ctx.horizon
        self.layout = ctx.layout

    def build(self, problem: LinearProblem, stage: int, state: MarkovState,
              profiles: Sequence[Tuple[NoiseProfile, float]], incoming: Sequence[int],
              block: int = 0, weight: float = 1.0) -> StageBlock:
        if not 0 <= stage < self.ctx.n_stages:
            raise BuildError(f"stage {stage} outside the {self.ctx.n_stages}-stage horizon")
        if len(incoming) != self.layout.dimension:
            raise BuildError(f"incoming state has {len(incoming)} entries, layout has {self.layout.dimension}")
        for profile, _ in profiles:
            if profile.day.hours != self.horizon.hours:
                raise BuildError(f"profile of day {profile.day.day_index} has {profile.day.hours} hours, "
                                 f"expected {self.horizon.hours}")
        result = StageBlock(stage, block, list(incoming), [])
        self._decisions(problem, result, state, weight)
        self._outgoing(problem, result)
        days = self.horizon.operating_days
        for o, (profile, rho) in enumerate(profiles):
            self._operations(problem, result, state, profile, o, weight * rho * days)
        return result

    def _in(self, block: StageBlock, tech: str, subject: str) -> List[int]:
        return [block.incoming[i] for i in self.layout.availability(tech, subject)]

    def _out(self, block: StageBlock, tech: str, subject: str) -> List[int]:
        return [block.outgoing[i] for i in self.layout.availability(tech, subject)]

    def _index(self, block: StageBlock, kind: str, subject: str = "", profile: int = -1,
               hour: int = -1) -> VariableIndex:
        return VariableIndex(kind, subject, block.stage, block.block, profile, hour)

    # investments

    def _decisions(self, problem: LinearProblem, block: StageBlock, state: MarkovState, weight: float) -> None:
        y = block.stage + 1
        rows = {row.id: row for row in self.net.rights_of_way}
        gens = {g.id: g for g in self.net.generators}
        for comp in self.layout.decisions():
            tech, subject = comp.tech, comp.subject
            cost = self.catalog.cost(tech)
            if tech in ROW_TECHS:
                length = rows[subject].length if tech != "F" else 0.0
                coef = investment_coefficient(cost, y, self.ctx.n_stages, self.horizon.years_per_stage,
                                              state.cost_scale(tech), length=length)
            elif tech == "R":
                override = gens[subject].retrofit_cost if gens[subject].retrofit_cost > 0 else None
                coef = investment_coefficient(cost, y, self.ctx.n_stages, self.horizon.years_per_stage,
                                              state.cost_scale(tech), capex_override=override)
            else:
                coef = investment_coefficient(cost, y, self.ctx.n_stages, self.horizon.years_per_stage,
                                              state.cost_scale(tech))
            if tech == "F":
                col = problem.add_var(self._index(block, "x:F", subject), 0.0, comp.upper, True, "56")
            elif comp.integer:
                col = problem.add_var(self._index(block, f"x:{tech}", subject), 0.0, 1.0, True)
            else:
                col = problem.add_var(self._index(block, f"i:{tech}", subject), 0.0, math.inf)
            problem.add_cost(col, coef * weight, INVESTMENT_TAGS)
            block.decisions[(tech, subject)] = col
            block.investment[col] = coef * weight

    def _outgoing(self, problem: LinearProblem, block: StageBlock) -> None:
        layout = self.layout
        for i, comp in enumerate(layout.components):
            col = problem.add_var(self._index(block, "state", comp.key), 0.0, comp.upper, comp.integer)
            block.outgoing.append(col)
            if comp.tech == "v":
                continue
            decision = block.decisions[(comp.tech, comp.subject)]
            if comp.slot == 0:
                problem.add_row({col: 1.0, block.incoming[i]: -1.0, decision: -1.0}, EQ, 0.0, "state")
            elif comp.slot == 1:
                problem.add_row({col: 1.0, decision: -1.0}, EQ, 0.0, "state")
            else:
                previous = layout.index(f"{comp.tech}:{comp.subject}#{comp.slot - 1}")
                problem.add_row({col: 1.0, block.incoming[previous]: -1.0}, EQ, 0.0, "state")
            if comp.tech == "F":
                problem.tag_bound(col, "56")

        for comp in layout.components:
            if comp.tech == "v":
                link_product(problem, block.outgoing[layout.index(comp.key)],
                             self._out(block, "L", comp.subject), self._out(block, "D", comp.subject))
        self._lifetimes(problem, block)
        self._connection_and_area(problem, block)
        self._line_dependency(problem, block)

    def _lifetimes(self, problem: LinearProblem, block: StageBlock) -> None:
        layout = self.layout
        for (tech, subject), decision in block.decisions.items():
            if tech not in ("D", "B", "P", "R"):
                continue
            window = layout.windows[tech]
            if layout.windowed(tech):
                live = [block.incoming[layout.index(f"{tech}:{subject}#{h}")] for h in range(1, window)]
                suffix = "a" if block.stage + 1 <= self.ctx.n_stages - window else "b"
            else:
                live = self._in(block, tech, subject)
                suffix = "b"
            coeffs = {decision: 1.0}
            coeffs.update({c: 1.0 for c in live})
            problem.add_row(coeffs, LE, 1.0, LIFETIME_TAG[tech] + suffix)

    def _connection_and_area(self, problem: LinearProblem, block: StageBlock) -> None:
        for bus in self.net.buses:
            coeffs: Dict[int, float] = {}
            for tech in ROTARY_TECHS:
                if not self.layout.has(tech, bus.id):
                    continue
                col = self._out(block, tech, bus.id)[0]
                coeffs[col] = 1.0
                footprint = self.catalog.cost(tech).footprint
                if footprint > 0:
                    problem.add_row({col: footprint}, LE, bus.candidate_area_thermal.get(tech, 0.0), "9")
            for zone in self.net.zones_at(bus.id):
                if self.layout.has(zone.technology, zone.id):
                    col = self._out(block, zone.technology, zone.id)[0]
                    coeffs[col] = 1.0
                    footprint = zone.footprint if zone.footprint is not None else \
                        self.catalog.cost(zone.technology).footprint
                    if footprint > 0:
                        problem.add_row({col: footprint}, LE, zone.area_available, "10")
            if coeffs:
                problem.add_row(coeffs, LE, bus.max_new_connection, "4")

    def _line_dependency(self, problem: LinearProblem, block: StageBlock) -> None:
        for row in self.net.rights_of_way:
            existing = 1.0 if row.has_existing_line else 0.0
            line_out = self._out(block, "L", row.id)
            if ("D", row.id) in block.decisions:
                coeffs = {block.decisions[("D", row.id)]: 1.0}
                coeffs.update({c: -1.0 for c in line_out})
                problem.add_row(coeffs, LE, existing, "8")
            if ("F", row.id) in block.decisions:
                cap = float(sssc_units(row, self.catalog))
                coeffs = {block.decisions[("F", row.id)]: 1.0}
                coeffs.update({c: -cap for c in line_out})
                problem.add_row(coeffs, LE, cap * existing, "8")

    # operations

    def _series(self, profile: NoiseProfile, key: str, scale: float, required: bool,
                what: str) -> Optional[np.ndarray]:
        series = profile.series(key)
        if series is None:
            if required:
                raise BuildError(f"profile of day {profile.day.day_index} has no series '{key}' for {what}")
            return None
        return np.asarray(series, dtype=float) * scale

    def _operations(self, problem: LinearProblem, block: StageBlock, state: MarkovState,
                    profile: NoiseProfile, o: int, weight: float) -> None:
        hours = range(self.horizon.hours)
        idx = lambda kind, subject="", t=-1: self._index(block, kind, subject, o, t)
        fuel = state.fuel_cost_scale

        def cost(col: int, coef: float) -> None:
            problem.add_cost(col, coef * weight, OPERATION_TAGS)
            if coef * weight != 0.0:
                block.operations[col] = block.operations.get(col, 0.0) + coef * weight

        balance: Dict[Tuple[str, int], Dict[int, float]] = {(b.id, t): {} for b in self.net.buses for t in hours}
        load: Dict[Tuple[str, int], float] = {}

        def inject(bus: str, t: int, col: int, coef: float) -> None:
            terms = balance[(bus, t)]
            terms[col] = terms.get(col, 0.0) + coef

        credits: Dict[Tuple[str, int], float] = {}

        def credit(bus: str, t: int, amount: float) -> None:
            # existing VRES output is a right-hand-side credit
            credits[(bus, t)] = credits.get((bus, t), 0.0) + amount

        for bus in self.net.buses:
            shape = self._series(profile, f"load:{bus.id}", state.load_scale, False, f"bus {bus.id}")
            for t in hours:
                demand = bus.avg_load * (shape[t] if shape is not None else state.load_scale)
                load[(bus.id, t)] = demand
                shed = problem.add_var(idx("shed", bus.id, t), 0.0, max(demand, 0.0), bound_tag="15")
                cost(shed, self.ctx.voll)
                inject(bus.id, t, shed, 1.0)
                problem.add_var(idx("theta", bus.id, t), -self.horizon.theta_bound, self.horizon.theta_bound,
                                bound_tag="21")

        emissions: Dict[int, float] = {}
        self._existing_generators(problem, block, idx, cost, inject, emissions, fuel)
        self._new_generators(problem, block, idx, cost, inject, fuel)
        for zone in self.net.zones:
            self._zone(problem, block, state, profile, zone, idx, cost, inject, credit)
        for bus in self.net.buses:
            if self.layout.has("B", bus.id):
                self._battery(problem, block, bus.id, idx, inject)
            if self.layout.has("P", bus.id):
                self._hydro(problem, block, bus.id, idx, inject)
        for row in self.net.rights_of_way:
            if row_has_line(row, self.ctx.enabled):
                self._corridor(problem, block, state, profile, row, idx, inject)

        if emissions:
            problem.add_row(emissions, LE, self.horizon.co2_targets[block.stage], "14")
        for (bus, t), terms in balance.items():
            problem.add_row(terms, EQ, load[(bus, t)] - credits.get((bus, t), 0.0), "20")

    def _existing_generators(self, problem, block, idx, cost, inject, emissions, fuel) -> None:
        for gen in self.net.generators:
            retrofit = self._in(block, "R", gen.id)
            previous = None
            for t in range(self.horizon.hours):
                if retrofit:
                    pre = problem.add_var(idx("p:E", gen.id, t), 0.0, gen.p_max)
                    post = problem.add_var(idx("p:R", gen.id, t), 0.0, gen.p_max)
                    problem.add_row({pre: 1.0, **{c: gen.p_max for c in retrofit}}, LE, gen.p_max, "11a")
                    problem.add_row({pre: 1.0, **{c: gen.p_min for c in retrofit}}, GE, gen.p_min, "11b")
                    problem.add_row({post: 1.0, **{c: -gen.p_max for c in retrofit}}, LE, 0.0, "12")
                    problem.add_row({post: 1.0, **{c: -gen.p_min for c in retrofit}}, GE, 0.0, "12")
                else:
                    pre = problem.add_var(idx("p:E", gen.id, t), gen.p_min, gen.p_max)
                    problem.tag_bound(pre, "11a")
                    problem.tag_bound(pre, "11b")
                    post = None
                cost(pre, (gen.cost_pre + gen.carbon_price_pre) * fuel)
                emissions[pre] = gen.emissions_pre
                inject(gen.bus, t, pre, 1.0)
                if post is not None:
                    cost(post, (gen.cost_post + gen.carbon_price_post) * fuel)
                    emissions[post] = gen.emissions_post
                    inject(gen.bus, t, post, 1.0)
                if previous is not None:
                    pre_prev, post_prev = previous
                    problem.add_row({pre: 1.0, pre_prev: -1.0}, LE, gen.ramp_up, "17")
                    problem.add_row({pre: 1.0, pre_prev: -1.0}, GE, gen.ramp_down, "17")
                    if post is not None:
                        problem.add_row({post: 1.0, post_prev: -1.0}, LE, gen.ramp_up, "18")
                        problem.add_row({post: 1.0, post_prev: -1.0}, GE, gen.ramp_down, "18")
                previous = (pre, post)

    def _new_generators(self, problem, block, idx, cost, inject, fuel) -> None:
        for bus in self.net.buses:
            for tech in ROTARY_TECHS:
                capacity = self._in(block, tech, bus.id)
                if not capacity:
                    continue
                spec = self.catalog.cost(tech)
                cap = capacity[0]
                previous = None
                for t in range(self.horizon.hours):
                    p = problem.add_var(idx(f"p:{tech}", bus.id, t), 0.0, math.inf)
                    problem.add_row({p: 1.0, cap: -spec.g_max}, LE, 0.0, "13")
                    problem.add_row({p: 1.0, cap: -spec.g_min}, GE, 0.0, "13")
                    cost(p, spec.variable_cost * fuel)
                    inject(bus.id, t, p, 1.0)
                    if previous is not None:
                        problem.add_row({p: 1.0, previous: -1.0, cap: -spec.ramp_up_factor}, LE, 0.0, "19a")
                        problem.add_row({p: 1.0, previous: -1.0, cap: -spec.ramp_down_factor}, GE, 0.0, "19b")
                    previous = p

    def _zone(self, problem, block, state: MarkovState, profile: NoiseProfile, zone: VresZone,
              idx, cost, inject, credit) -> None:
        if zone.bus is None:
            raise BuildError(f"zone {zone.id} is not attached to a bus")
        capacity = self._in(block, zone.technology, zone.id)
        if zone.existing_capacity <= 0 and not self.layout.has(zone.technology, zone.id):
            return
        scale = state.solar_scale if zone.kind == "solar" else state.wind_scale
        factors = np.clip(self._series(profile, zone.series_key, scale, True, f"zone {zone.id}"), 0.0, 1.0)
        penalty = self.ctx.curtailment_penalty(zone.technology)
        for t in range(self.horizon.hours):
            zeta = float(factors[t])
            available = zeta * zone.existing_capacity
            if capacity:
                curtail = problem.add_var(idx(f"curt:{zone.technology}", zone.id, t), 0.0, math.inf)
                problem.add_row({curtail: 1.0, capacity[0]: -zeta}, LE, available, "16")
                inject(zone.bus, t, capacity[0], zeta)
            else:
                curtail = problem.add_var(idx(f"curt:{zone.technology}", zone.id, t), 0.0, available,
                                          bound_tag="16")
            cost(curtail, penalty)
            inject(zone.bus, t, curtail, -1.0)
            credit(zone.bus, t, available)

    def _battery(self, problem, block, bus: str, idx, inject) -> None:
        spec = self.catalog.battery
        available = self._in(block, "B", bus)
        T = self.horizon.hours
        initial = self.horizon.initial_soc if self.horizon.initial_soc is not None else spec.soc_min
        lifetime = self.catalog.cost("B").lifetime
        budget = (1.0 - spec.end_of_life) / lifetime
        if self.horizon.degradation_budget == "per-day":
            budget /= 365.0
        big_m = T * (DEGRADATION_LINES[0][1] + spec.shelf_degradation)
        soc_prev = charge_prev = discharge_prev = None
        cycle = {}
        for t in range(T):
            charge = problem.add_var(idx("p:CH", bus, t), 0.0, math.inf)
            discharge = problem.add_var(idx("p:DI", bus, t), 0.0, math.inf)
            soc = problem.add_var(idx("soc", bus, t), spec.soc_min, spec.soc_max, bound_tag="27")
            mode = problem.add_var(idx("x:state", bus, t), 0.0, 1.0, True)
            wear = problem.add_var(idx("dcy", bus, t), -1.0, math.inf)
            if t == 0:
                problem.fix(soc, initial, "initial")
            problem.add_row({charge: 1.0, **{c: -spec.ch_max for c in available}}, LE, 0.0, "23")
            problem.add_row({discharge: 1.0, **{c: -spec.di_max for c in available}}, LE, 0.0, "24")
            problem.add_row({charge: 1.0, mode: -spec.ch_max}, LE, 0.0, "25")
            problem.add_row({discharge: 1.0, mode: spec.di_max}, LE, spec.di_max, "26")
            for slope, intercept, tag in DEGRADATION_LINES:
                problem.add_row({wear: 1.0, soc: -slope / spec.soc_max}, GE, intercept, tag)
            if soc_prev is not None:
                out_coef = 1.0 / spec.eta_di if self.horizon.soc_convention == "physical" else spec.eta_di
                problem.add_row({soc: 1.0, soc_prev: -1.0, charge_prev: -spec.eta_ch, discharge_prev: out_coef},
                                EQ, 0.0, "28")
            inject(bus, t, discharge, 1.0)
            inject(bus, t, charge, -1.0)
            cycle[wear] = 1.0
            soc_prev, charge_prev, discharge_prev = soc, charge, discharge
        cycle.update({c: big_m for c in available})
        problem.add_row(cycle, LE, budget - T * spec.shelf_degradation + big_m, "30")

    def _hydro(self, problem, block, bus: str, idx, inject) -> None:
        spec = self.catalog.hydro
        available = self._in(block, "P", bus)
        T = self.horizon.hours
        prev = None
        for t in range(T):
            turbine = problem.add_var(idx("p:T", bus, t), 0.0, math.inf)
            pump = problem.add_var(idx("p:P", bus, t), 0.0, math.inf)
            flow_t = problem.add_var(idx("w:T", bus, t), 0.0, math.inf)
            flow_p = problem.add_var(idx("w:P", bus, t), 0.0, math.inf)
            upper = problem.add_var(idx("v:U", bus, t), spec.v_upper_min, spec.v_upper_max, bound_tag="35")
            lower = problem.add_var(idx("v:L", bus, t), spec.v_lower_min, spec.v_lower_max, bound_tag="36")
            if t == 0:
                problem.fix(upper, spec.v_upper_0, "initial")
                problem.fix(lower, spec.v_lower_0, "initial")
            if t == T - 1:
                problem.lb[upper] = max(problem.lb[upper], spec.v_upper_0)
                problem.lb[lower] = max(problem.lb[lower], spec.v_lower_0)
                problem.tag_bound(upper, "37")
                problem.tag_bound(lower, "38")
            problem.add_row({turbine: 1.0, flow_t: -spec.sigma_t}, EQ, 0.0, "31")
            problem.add_row({pump: 1.0, flow_p: -spec.sigma_p}, EQ, 0.0, "32")
            problem.add_row({flow_t: 1.0, **{c: -spec.w_max for c in available}}, LE, 0.0, "39")
            problem.add_row({flow_p: 1.0, **{c: -spec.w_max for c in available}}, LE, 0.0, "40")
            if prev is not None:
                upper_prev, lower_prev, wt_prev, wp_prev = prev
                problem.add_row({upper: 1.0, upper_prev: -1.0, wp_prev: -1.0, wt_prev: 1.0}, EQ, 0.0, "33")
                problem.add_row({lower: 1.0, lower_prev: -1.0, wt_prev: -1.0, wp_prev: 1.0}, EQ, 0.0, "34")
            inject(bus, t, turbine, 1.0)
            inject(bus, t, pump, -1.0)
            prev = (upper, lower, flow_t, flow_p)

    def _corridor(self, problem, block, state: MarkovState, profile: NoiseProfile, row: RightOfWay,
                  idx, inject) -> None:
        line = self._in(block, "L", row.id)
        dtr = self._in(block, "D", row.id)
        units = self._in(block, "F", row.id)
        product = self._in(block, "v", row.id)
        dtr_existing = dtr_new = None
        if dtr and row.has_existing_line:
            dtr_existing = self._dtr(profile, row.dtr_rating_existing, state.dtr_scale, row, "existing")
        if dtr and product:
            dtr_new = self._dtr(profile, row.dtr_rating_new, state.dtr_scale, row, "new")
        x = row.reactance
        span = 2.0 * self.horizon.theta_bound / abs(x)
        static_existing = row.static_rating_existing if row.has_existing_line else 0.0
        for t in range(self.horizon.hours):
            ratings = LineRatings(
                static_existing,
                row.static_rating_new if line else 0.0,
                float(dtr_existing[t]) if dtr_existing is not None else 0.0,
                float(dtr_new[t]) if dtr_new is not None else 0.0,
            )
            flow = problem.add_var(idx("f", row.id, t), -math.inf, math.inf)
            theta_from = problem.col(idx("theta", row.from_bus, t))
            theta_to = problem.col(idx("theta", row.to_bus, t))
            dc = {flow: 1.0, theta_from: -1.0 / x, theta_to: 1.0 / x}
            if units:
                injection = problem.add_var(idx("df", row.id, t), -math.inf, math.inf)
                dc[injection] = -1.0
            if row.has_existing_line:
                problem.add_row(dc, EQ, 0.0, "22")
            else:
                problem.add_row({**dc, **{c: span for c in line}}, LE, span, "22")
                problem.add_row({**dc, **{c: -span for c in line}}, GE, -span, "22")
            linearize_line_capacity(problem, flow, ratings, line, dtr, product[0] if product else None)
            if units:
                above = problem.add_var(idx("u:a", row.id, t), 0.0, 1.0, True)
                below = problem.add_var(idx("u:b", row.id, t), 0.0, 1.0, True)
                linearize_sssc(problem, flow, injection, units, above, below, x, row.sssc_voltage,
                               row.sssc_cut_in, sssc_units(row, self.catalog),
                               sssc_big_m(ratings.peak, row.sssc_cut_in), self.horizon.sssc_cut_in_margin)
            inject(row.from_bus, t, flow, -1.0)
            inject(row.to_bus, t, flow, 1.0)

    def _dtr(self, profile: NoiseProfile, key: Optional[str], scale: float, row: RightOfWay,
             which: str) -> np.ndarray:
        if key is None:
            raise BuildError(f"right-of-way {row.id} is a DTR candidate but names no {which} rating series")
        return self._series(profile, key, scale, True, f"{which} DTR rating of {row.id}")


@dataclass
class StageProblem:
    """One SDDP node: a stage block fed by copy columns, plus a cost-to-go column.

    Setting the right-hand sides of `copy_rows` to a trial state makes the
    problem the node's recourse problem at that state; the duals of those
    rows are the cut slopes.
    """
    stage: int
    state: MarkovState
    problem: LinearProblem
    block: StageBlock
    copy_rows: List[int]
    theta: Optional[int] = None

    @property
    def outgoing(self) -> List[int]:
        return self.block.outgoing

    def stage_cost(self, x: np.ndarray) -> float:
        future = x[self.theta] if self.theta is not None else 0.0
        return self.problem.objective_value(x) - float(future)


def build_stage_problem(ctx: FormulationContext, state: MarkovState,
                        profiles: Sequence[Tuple[NoiseProfile, float]], stage: int,
                        with_future: Optional[bool] = None) -> StageProblem:
    """Stage problem for a 0-based stage with ρ-weighted profiles.

    The cost-to-go column is bounded below by zero since every cost is nonnegative.
    """
    problem = LinearProblem(name=f"stage{stage}-{state.label}")
    incoming, copy_rows = add_copy_state(problem, ctx.layout, stage)
    block = StageBlockBuilder(ctx).build(problem, stage, state, profiles, incoming)
    if with_future is None:
        with_future = stage < ctx.n_stages - 1
    theta = None
    if with_future:
        theta = problem.add_var(VariableIndex("theta_future", "", stage), 0.0, math.inf)
        problem.add_cost(theta, 1.0)
    logger.debug(f"Built {problem.name}: {problem.n_cols} columns, {problem.n_rows} rows")
    return StageProblem(stage, state, problem, block, copy_rows, theta)
