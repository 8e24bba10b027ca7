import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional

import numpy as np

from src.types import (
    CAPACITY_TECHS, ROTARY_TECHS, TECHNOLOGIES, Network, PlanningHorizon, RightOfWay, TechnologyCatalog,
)

logger = logging.getLogger("formulation.state")

# technologies whose allocations expire after their lifetime
WINDOWED_TECHS = ("D", "B", "P", "R")
LIFETIME_TAG = {"D": "5", "F": "5", "B": "6", "P": "6", "R": "7"}


@dataclass(frozen=True)
class StateComponent:
    """One entry of the state vector.

    `slot` is 0 for cumulative entries; slot h >= 1 holds the allocation made
    h stages before the stage that receives it. `tech` is "v" for the
    line/DTR product flag.
    """
    tech: str
    subject: str
    slot: int = 0
    integer: bool = False
    upper: float = math.inf

    @property
    def key(self) -> str:
        return f"{self.tech}:{self.subject}" + (f"#{self.slot}" if self.slot else "")


@dataclass
class StateLayout:
    components: List[StateComponent]
    windows: Dict[str, int] = field(default_factory=dict)
    n_stages: int = 1
    _index: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self._index = {c.key: i for i, c in enumerate(self.components)}

    @property
    def dimension(self) -> int:
        return len(self.components)

    def index(self, key: str) -> int:
        return self._index[key]

    def has(self, tech: str, subject: str) -> bool:
        return f"{tech}:{subject}" in self._index or f"{tech}:{subject}#1" in self._index

    def windowed(self, tech: str) -> bool:
        """True when allocations of tech expire inside the horizon."""
        return tech in self.windows and self.windows[tech] < self.n_stages

    def availability(self, tech: str, subject: str) -> List[int]:
        """Positions whose sum is the number of allocations of tech still in service."""
        if not self.has(tech, subject):
            return []
        if self.windowed(tech):
            return [self._index[f"{tech}:{subject}#{h}"] for h in range(1, self.windows[tech] + 1)]
        return [self._index[f"{tech}:{subject}"]]

    def decisions(self) -> List[StateComponent]:
        """One entry per allocation decision, in layout order."""
        seen, out = set(), []
        for comp in self.components:
            if comp.tech == "v" or (comp.tech, comp.subject) in seen:
                continue
            seen.add((comp.tech, comp.subject))
            out.append(comp)
        return out

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dimension)

    def describe(self, values: Iterable[float]) -> Dict[str, float]:
        return {c.key: float(v) for c, v in zip(self.components, values)}


def window_length(lifetime_years: float, years_per_stage: float) -> int:
    return max(1, math.ceil(lifetime_years / years_per_stage - 1e-9))


def row_has_line(row: RightOfWay, enabled: FrozenSet[str]) -> bool:
    return row.has_existing_line or (row.candidate_line_allowed and "L" in enabled)


def sssc_units(row: RightOfWay, catalog: TechnologyCatalog) -> int:
    return row.sssc_max_units if row.sssc_max_units is not None else catalog.sssc_max_units


def build_state_layout(net: Network, catalog: TechnologyCatalog, horizon: PlanningHorizon,
                       enabled: Optional[Iterable[str]] = None) -> StateLayout:
    """Enumerate the state entries of a planning problem.

    Capacity entries exist where a technology may be built; allocation flags
    exist per bus (B, P), per generator (R) and per right-of-way (L, D, F).
    """
    enabled = frozenset(TECHNOLOGIES if enabled is None else enabled)
    windows = {t: window_length(catalog.cost(t).lifetime, horizon.years_per_stage)
               for t in WINDOWED_TECHS if t in enabled}

    def flag(tech: str, subject: str) -> List[StateComponent]:
        if tech in windows and windows[tech] < horizon.n_stages:
            return [StateComponent(tech, subject, h, True, 1.0) for h in range(1, windows[tech] + 1)]
        return [StateComponent(tech, subject, 0, True, 1.0)]

    comps: List[StateComponent] = []
    for bus in net.buses:
        if bus.max_new_connection <= 0:
            continue
        for tech in ROTARY_TECHS:
            if tech not in enabled:
                continue
            footprint = catalog.cost(tech).footprint
            if footprint == 0 or bus.candidate_area_thermal.get(tech, 0.0) > 0:
                comps.append(StateComponent(tech, bus.id, upper=bus.max_new_connection))
    for zone in net.zones:
        tech = zone.technology
        if tech not in enabled or zone.bus is None or zone.area_available <= 0:
            continue
        if net.bus(zone.bus).max_new_connection > 0:
            comps.append(StateComponent(tech, zone.id, upper=net.bus(zone.bus).max_new_connection))
    for bus in net.buses:
        if "B" in enabled and bus.battery_candidate and catalog.battery is not None:
            comps.extend(flag("B", bus.id))
        if "P" in enabled and bus.hydro_candidate and catalog.hydro is not None:
            comps.extend(flag("P", bus.id))
    for gen in net.generators:
        if "R" in enabled and gen.retrofit_allowed:
            comps.extend(flag("R", gen.id))
    for row in net.rights_of_way:
        if not row_has_line(row, enabled):
            continue
        line = "L" in enabled and row.candidate_line_allowed
        dtr = "D" in enabled and row.dtr_allowed
        if line:
            comps.append(StateComponent("L", row.id, 0, True, 1.0))
        if dtr:
            comps.extend(flag("D", row.id))
        if "F" in enabled and row.sssc_allowed:
            comps.append(StateComponent("F", row.id, 0, True, float(sssc_units(row, catalog))))
        if line and dtr:
            comps.append(StateComponent("v", row.id, 0, True, 1.0))

    layout = StateLayout(comps, windows, horizon.n_stages)
    counts = {t: sum(1 for c in comps if c.tech == t) for t in (*CAPACITY_TECHS, "B", "P", "R", "L", "D", "F", "v")}
    logger.debug(f"State layout with {layout.dimension} entries: {counts}")
    return layout
