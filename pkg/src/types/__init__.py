from typing import Dict, Iterable, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

TECHNOLOGIES = ("G", "N", "H", "S", "W", "B", "P", "L", "D", "F", "R")
CAPACITY_TECHS = ("G", "N", "H", "S", "W")
ROTARY_TECHS = ("G", "N", "H")
VRES_TECHS = ("S", "W")
ROW_TECHS = ("L", "D", "F")
BUS_DEVICE_TECHS = ("B", "P")


class StrictModel(BaseModel):
    """Input records: unknown keys are rejected and records are immutable after load."""
    model_config = ConfigDict(extra="forbid", frozen=True)


class NetworkUnits(StrictModel):
    base_mva: float = 100.0
    power: Literal["p.u."] = "p.u."
    length: Literal["km"] = "km"
    area: Literal["km2"] = "km2"
    angle: Literal["rad"] = "rad"


class Bus(StrictModel):
    id: str
    name: str = ""
    avg_load: float
    max_new_connection: float = 0.0
    candidate_area_thermal: Dict[str, float] = Field(default_factory=dict)
    latitude: Optional[float] = None
    longitude: Optional[float] = None
    battery_candidate: bool = True
    hydro_candidate: bool = False


class RightOfWay(StrictModel):
    id: str
    from_bus: str
    to_bus: str
    length: float
    reactance: float
    has_existing_line: bool
    static_rating_existing: float = 0.0
    static_rating_new: float = 0.0
    # names of hourly rating series carried by the noise profiles
    dtr_rating_existing: Optional[str] = None
    dtr_rating_new: Optional[str] = None
    candidate_line_allowed: bool = False
    dtr_allowed: bool = True
    sssc_allowed: bool = True
    sssc_voltage: float = 0.01
    sssc_cut_in: float = 0.0
    sssc_max_units: Optional[int] = None


class ExistingGenerator(StrictModel):
    id: str
    bus: str
    p_min: float = 0.0
    p_max: float
    ramp_up: float
    ramp_down: float
    emissions_pre: float = 0.0
    emissions_post: float = 0.0
    cost_pre: float = 0.0
    cost_post: float = 0.0
    carbon_price_pre: float = 0.0
    carbon_price_post: float = 0.0
    retrofit_cost: float = 0.0
    retrofit_allowed: bool = False


class VresZone(StrictModel):
    id: str
    kind: Literal["solar", "wind"]
    bus: Optional[str] = None
    area_available: float
    existing_capacity: float = 0.0
    profile_key: Optional[str] = None
    footprint: Optional[float] = None
    latitude: Optional[float] = None
    longitude: Optional[float] = None

    @property
    def technology(self) -> str:
        return "S" if self.kind == "solar" else "W"

    @property
    def series_key(self) -> str:
        return self.profile_key or f"{self.kind}:{self.id}"


class Network(StrictModel):
    name: str = "network"
    units: NetworkUnits = Field(default_factory=NetworkUnits)
    buses: List[Bus]
    rights_of_way: List[RightOfWay] = Field(default_factory=list)
    generators: List[ExistingGenerator] = Field(default_factory=list)
    zones: List[VresZone] = Field(default_factory=list)

    def bus_ids(self) -> List[str]:
        return [bus.id for bus in self.buses]

    def bus(self, bus_id: str) -> Bus:
        for bus in self.buses:
            if bus.id == bus_id:
                return bus
        raise KeyError(bus_id)

    def zones_at(self, bus_id: str, kind: Optional[str] = None) -> List[VresZone]:
        return [z for z in self.zones if z.bus == bus_id and (kind is None or z.kind == kind)]

    def generators_at(self, bus_id: str) -> List[ExistingGenerator]:
        return [g for g in self.generators if g.bus == bus_id]


class TechnologyCost(StrictModel):
    capex: float = 0.0
    capex_per_km: float = 0.0
    fixed_om: float = 0.0
    variable_cost: float = 0.0
    g_min: float = 0.0
    g_max: float = 1.0
    ramp_up_factor: float = 1.0
    ramp_down_factor: float = -1.0
    footprint: float = 0.0
    lifetime: float = 100.0


class BatterySpec(StrictModel):
    ch_max: float
    di_max: float
    eta_ch: float = 0.95
    eta_di: float = 0.95
    soc_min: float
    soc_max: float
    shelf_degradation: float = 1e-6
    end_of_life: float = 0.8


class HydroSpec(StrictModel):
    sigma_t: float
    sigma_p: float
    v_upper_min: float = 0.0
    v_upper_max: float
    v_lower_min: float = 0.0
    v_lower_max: float
    v_upper_0: float
    v_lower_0: float
    w_max: float


class TechnologyCatalog(StrictModel):
    technologies: Dict[str, TechnologyCost]
    battery: Optional[BatterySpec] = None
    hydro: Optional[HydroSpec] = None
    sssc_max_units: int = 10

    def cost(self, tech: str) -> TechnologyCost:
        if tech not in self.technologies:
            raise ConfigurationError(f"technology {tech} has no catalog entry")
        return self.technologies[tech]

    def missing_for(self, enabled: Iterable[str]) -> List[str]:
        """Enabled factors the catalog cannot price or parameterize."""
        enabled = list(enabled)
        missing = [t for t in enabled if t not in self.technologies]
        if "B" in enabled and self.battery is None:
            missing.append("B (battery)")
        if "P" in enabled and self.hydro is None:
            missing.append("P (hydro)")
        return missing


class PlanningHorizon(StrictModel):
    n_stages: int
    years_per_stage: float = 5.0
    co2_targets: List[float]
    theta_bound: float = 0.5236
    voll_per_mwh: float = 100.0
    curtailment_penalty_solar: Optional[float] = None
    curtailment_penalty_wind: Optional[float] = None
    hours: int = 24
    days_per_stage: Optional[float] = None
    degradation_budget: Literal["per-profile", "per-day"] = "per-profile"
    soc_convention: Literal["physical", "scaled-discharge"] = "physical"
    initial_soc: Optional[float] = None
    sssc_cut_in_margin: float = 1e-4

    @property
    def operating_days(self) -> float:
        if self.days_per_stage is not None:
            return self.days_per_stage
        return 365.0 * self.years_per_stage


class SddpSettings(StrictModel):
    stall_tolerance: float = 1e-4
    stall_iterations: int = 25
    max_iterations: int = 200
    mode: Literal["synchronous", "asynchronous"] = "synchronous"
    simulations: int = 100
    warm_start: Optional[str] = None


class RunConfig(StrictModel):
    """Run file: which inputs to combine and how to solve them."""
    name: str
    network: str
    catalog: str
    horizon: str
    scenarios: str
    backend: Literal["mono", "sddp"] = "mono"
    engine: Literal["native", "highs"] = "native"
    factors: Dict[str, bool] = Field(default_factory=lambda: {t: True for t in TECHNOLOGIES})
    case: Optional[Literal["A", "B", "C", "D", "E", "F"]] = None
    relax_integrality: bool = False
    rel_gap: float = 1e-6
    lp_tol: float = 1e-7
    time_limit: Optional[float] = None
    node_limit: Optional[int] = None
    seed: int = 0
    workers: int = 1
    output_dir: str = "output"
    sddp: SddpSettings = Field(default_factory=SddpSettings)
    zone_sweep_sizes: List[int] = Field(default_factory=lambda: [5, 20, 80])
    zone_sweep_repetitions: int = 30

    def enabled(self, tech: str) -> bool:
        return bool(self.factors.get(tech, False))


class ConfigurationError(Exception):
    """Raised when a configuration record or curve file is inconsistent"""
    pass
