import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

import networkx as nx

from src.grid.geo import located_buses, nearest_bus
from src.types import Network, PlanningHorizon, TechnologyCatalog

logger = logging.getLogger("grid.validation")

STRUCTURAL = ("empty", "duplicate-id", "dangling-reference")


@dataclass
class Violation:
    code: str
    subject: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.subject}: {self.message}"


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    connected: bool = True

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, subject: str, message: str) -> None:
        self.violations.append(Violation(code, subject, message))

    def structural(self) -> List[Violation]:
        return [v for v in self.violations if v.code in STRUCTURAL]

    def extend(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)
        self.warnings.extend(other.warnings)
        self.connected = self.connected and other.connected


def _check_ids(report: ValidationReport, kind: str, ids: List[str]) -> None:
    seen = set()
    for item_id in ids:
        if item_id in seen:
            report.add("duplicate-id", f"{kind} {item_id}", "id is used more than once")
        seen.add(item_id)


def validate_network(net: Network) -> ValidationReport:
    """List every violated record invariant; connectivity only produces a warning."""
    report = ValidationReport()
    if not net.buses:
        report.add("empty", "network", "no buses")
        report.connected = False
        return report

    bus_ids = set(net.bus_ids())
    _check_ids(report, "bus", net.bus_ids())
    _check_ids(report, "right-of-way", [r.id for r in net.rights_of_way])
    _check_ids(report, "generator", [g.id for g in net.generators])
    _check_ids(report, "zone", [z.id for z in net.zones])

    for bus in net.buses:
        if bus.max_new_connection < 0:
            report.add("bound", f"bus {bus.id}", "max_new_connection is negative")
        for tech, area in bus.candidate_area_thermal.items():
            if area < 0:
                report.add("bound", f"bus {bus.id}", f"candidate area for {tech} is negative")

    for row in net.rights_of_way:
        subject = f"right-of-way {row.id}"
        for end in (row.from_bus, row.to_bus):
            if end not in bus_ids:
                report.add("dangling-reference", subject, f"unknown bus {end}")
        if row.from_bus == row.to_bus:
            report.add("topology", subject, "from_bus equals to_bus")
        if row.reactance <= 0:
            report.add("reactance", subject, f"reactance must be positive, got {row.reactance}")
        if row.static_rating_existing < 0 or row.static_rating_new < 0:
            report.add("rating", subject, "ratings must be non-negative")
        if not row.has_existing_line and row.static_rating_existing != 0:
            report.add("rating", subject, "static_rating_existing set on a right-of-way without a line")
        if row.sssc_max_units is not None and row.sssc_max_units < 0:
            report.add("bound", subject, "sssc_max_units is negative")

    for gen in net.generators:
        subject = f"generator {gen.id}"
        if gen.bus not in bus_ids:
            report.add("dangling-reference", subject, f"unknown bus {gen.bus}")
        if gen.p_min < 0 or gen.p_min > gen.p_max:
            report.add("bound-order", subject, f"need 0 <= p_min <= p_max, got {gen.p_min} and {gen.p_max}")
        if gen.emissions_post > gen.emissions_pre:
            report.add("emissions", subject, "emissions_post exceeds emissions_pre")
        if gen.ramp_down > 0 or gen.ramp_up < 0:
            report.add("ramp-sign", subject, "need ramp_down <= 0 <= ramp_up")

    located = len(located_buses(net.buses)) == len(net.buses)
    for zone in net.zones:
        subject = f"zone {zone.id}"
        if zone.bus is None or zone.bus not in bus_ids:
            report.add("dangling-reference", subject, f"unknown bus {zone.bus}")
            continue
        if zone.area_available < 0 or zone.existing_capacity < 0:
            report.add("bound", subject, "area and existing capacity must be non-negative")
        if located and zone.latitude is not None and zone.longitude is not None:
            expected = nearest_bus(net, zone.latitude, zone.longitude)
            if expected != zone.bus:
                report.add("zone-association", subject, f"nearest bus is {expected}, not {zone.bus}")

    graph = nx.Graph()
    graph.add_nodes_from(bus_ids)
    graph.add_edges_from(
        (r.from_bus, r.to_bus) for r in net.rights_of_way
        if r.has_existing_line and r.from_bus in bus_ids and r.to_bus in bus_ids
    )
    report.connected = nx.is_connected(graph)
    if not report.connected:
        islands = [sorted(c) for c in nx.connected_components(graph)]
        report.warnings.append(f"existing lines leave {len(islands)} islands: {islands}")
    return report


def validate_catalog(catalog: TechnologyCatalog, enabled: Optional[Iterable[str]] = None) -> ValidationReport:
    report = ValidationReport()
    for tech in catalog.missing_for(enabled or ()):
        report.add("missing-technology", f"technology {tech}", "enabled but absent from the catalog")
    for tech, cost in catalog.technologies.items():
        subject = f"technology {tech}"
        if min(cost.capex, cost.capex_per_km, cost.fixed_om, cost.variable_cost) < 0:
            report.add("cost", subject, "costs must be non-negative")
        if cost.lifetime < 1:
            report.add("lifetime", subject, "lifetime must be at least one year")
        if cost.g_min > cost.g_max:
            report.add("bound-order", subject, "g_min exceeds g_max")
        if cost.ramp_down_factor > 0 or cost.ramp_up_factor < 0:
            report.add("ramp-sign", subject, "need ramp_down_factor <= 0 <= ramp_up_factor")
    battery = catalog.battery
    if battery is not None:
        if not (0 < battery.eta_ch <= 1 and 0 < battery.eta_di <= 1):
            report.add("efficiency", "battery", "efficiencies must lie in (0, 1]")
        if battery.soc_min >= battery.soc_max:
            report.add("bound-order", "battery", "soc_min must be below soc_max")
        if not 0 < battery.end_of_life < 1:
            report.add("bound", "battery", "end_of_life must lie in (0, 1)")
    hydro = catalog.hydro
    if hydro is not None:
        if hydro.v_upper_min > hydro.v_upper_max or hydro.v_lower_min > hydro.v_lower_max:
            report.add("bound-order", "hydro", "reservoir bounds are inverted")
        if not (hydro.v_upper_min <= hydro.v_upper_0 <= hydro.v_upper_max
                and hydro.v_lower_min <= hydro.v_lower_0 <= hydro.v_lower_max):
            report.add("bound", "hydro", "initial volumes lie outside the reservoir bounds")
    return report


def validate_horizon(horizon: PlanningHorizon) -> ValidationReport:
    report = ValidationReport()
    if horizon.n_stages < 2:
        report.add("bound", "horizon", "n_stages must be at least 2")
    if len(horizon.co2_targets) != horizon.n_stages:
        report.add("shape", "horizon", f"expected {horizon.n_stages} CO2 targets, got {len(horizon.co2_targets)}")
    if horizon.theta_bound <= 0:
        report.add("bound", "horizon", "theta_bound must be positive")
    if horizon.years_per_stage <= 0:
        report.add("bound", "horizon", "years_per_stage must be positive")
    return report
