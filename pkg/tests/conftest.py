from pathlib import Path

import numpy as np
import pytest

from src.formulation.stage import FormulationContext
from src.scenarios.clustering import DayVector, NoiseProfile
from src.scenarios.markov import MarkovState, build_markov_chain
from src.types import (
    BatterySpec, Bus, ExistingGenerator, HydroSpec, Network, PlanningHorizon, RightOfWay, TechnologyCatalog,
    TechnologyCost, VresZone,
)

CASES_DIR = Path(__file__).resolve().parent.parent / "cases"

HOURS = 4
SYNTHETIC_VARIABLES = ("load:1", "load:2", "load:3", "solar:s1", "wind:w1")


@pytest.fixture
def cases_dir() -> Path:
    return CASES_DIR


@pytest.fixture
def one_bus_network() -> Network:
    return Network(
        name="one-bus",
        buses=[Bus(id="1", avg_load=0.5)],
        generators=[ExistingGenerator(id="gas", bus="1", p_max=1.0, ramp_up=0.5, ramp_down=-0.5,
                                      emissions_pre=1.0, cost_pre=5.0)],
    )


@pytest.fixture
def horizon_24h() -> PlanningHorizon:
    return PlanningHorizon(n_stages=2, co2_targets=[1e6, 1e6], hours=24, days_per_stage=1.0)


@pytest.fixture
def battery_catalog() -> TechnologyCatalog:
    return TechnologyCatalog(
        technologies={"B": TechnologyCost(capex=50.0, lifetime=15.0)},
        battery=BatterySpec(ch_max=0.5, di_max=0.5, soc_min=0.2, soc_max=2.0),
    )


@pytest.fixture
def sssc_network() -> Network:
    return Network(
        name="two-bus",
        buses=[Bus(id="1", avg_load=0.2), Bus(id="2", avg_load=0.6)],
        rights_of_way=[RightOfWay(id="L1", from_bus="1", to_bus="2", length=50.0, reactance=0.1,
                                  has_existing_line=True, static_rating_existing=0.5)],
        generators=[ExistingGenerator(id="gas", bus="1", p_max=1.0, ramp_up=1.0, ramp_down=-1.0, cost_pre=5.0)],
    )


def flat_profile(hours: int, variables=("load:1",), level: float = 1.0, index: int = 0) -> NoiseProfile:
    return NoiseProfile(DayVector(index, np.full((hours, len(variables)), level), tuple(variables)), 1.0)


@pytest.fixture
def flat_day():
    return flat_profile


def _synthetic_day(index: int, load: float, solar: float, wind: float) -> DayVector:
    t = np.arange(HOURS)
    values = np.column_stack([
        load * (1.0 + 0.1 * np.sin(t)),
        load * (0.9 + 0.05 * t),
        load * (1.1 - 0.05 * t),
        np.clip(solar * np.sin(np.pi * (t + 0.5) / HOURS), 0.0, 1.0),
        np.full(HOURS, wind),
    ])
    return DayVector(index, values, SYNTHETIC_VARIABLES)


@pytest.fixture
def three_bus_network() -> Network:
    return Network(
        name="three-bus",
        buses=[
            Bus(id="1", avg_load=0.4, max_new_connection=1.5),
            Bus(id="2", avg_load=0.5, max_new_connection=1.5),
            Bus(id="3", avg_load=0.3, max_new_connection=1.5),
        ],
        rights_of_way=[
            RightOfWay(id="L1", from_bus="1", to_bus="2", length=80.0, reactance=0.1, has_existing_line=True,
                       static_rating_existing=0.4),
            RightOfWay(id="L2", from_bus="2", to_bus="3", length=60.0, reactance=0.1, has_existing_line=True,
                       static_rating_existing=0.4),
            RightOfWay(id="L3", from_bus="1", to_bus="3", length=90.0, reactance=0.12, has_existing_line=False,
                       static_rating_new=0.5, candidate_line_allowed=True),
        ],
        generators=[
            ExistingGenerator(id="coal", bus="1", p_max=0.8, ramp_up=0.4, ramp_down=-0.4,
                              emissions_pre=10.0, cost_pre=3.0),
            ExistingGenerator(id="gas", bus="3", p_max=0.6, ramp_up=0.6, ramp_down=-0.6,
                              emissions_pre=4.0, cost_pre=6.0),
        ],
        zones=[
            VresZone(id="s1", kind="solar", bus="2", area_available=3.0),
            VresZone(id="w1", kind="wind", bus="3", area_available=30.0),
        ],
    )


@pytest.fixture
def three_bus_catalog() -> TechnologyCatalog:
    return TechnologyCatalog(technologies={
        "G": TechnologyCost(capex=60.0, fixed_om=1.0, variable_cost=7.0),
        "S": TechnologyCost(capex=40.0, fixed_om=0.5, footprint=2.0),
        "W": TechnologyCost(capex=55.0, fixed_om=1.0, footprint=30.0),
        "L": TechnologyCost(capex_per_km=0.4),
    })


@pytest.fixture
def three_bus_horizon() -> PlanningHorizon:
    return PlanningHorizon(n_stages=2, years_per_stage=5.0, co2_targets=[60.0, 20.0], voll_per_mwh=1.0,
                           hours=HOURS, days_per_stage=10.0)


@pytest.fixture
def three_bus_ctx(three_bus_network, three_bus_catalog, three_bus_horizon) -> FormulationContext:
    return FormulationContext.create(three_bus_network, three_bus_catalog, three_bus_horizon, "GSWL")


@pytest.fixture
def two_state_chain():
    """Root with one profile, then a low and a high state with one profile each."""
    stages = [
        [MarkovState(label="base")],
        [MarkovState(label="low", load_scale=0.9),
         MarkovState(label="high", load_scale=1.3, tech_cost_scale={"S": 0.8})],
    ]
    profiles = {
        (0, 0): [NoiseProfile(_synthetic_day(1, 1.0, 0.8, 0.4), 1.0)],
        (1, 0): [NoiseProfile(_synthetic_day(2, 0.9, 0.6, 0.5), 1.0)],
        (1, 1): [NoiseProfile(_synthetic_day(3, 1.2, 0.9, 0.2), 1.0)],
    }
    return build_markov_chain(stages, [[[0.4, 0.6]]], profiles, name="two-state")


@pytest.fixture
def deterministic_chain():
    stages = [[MarkovState(label="base")], [MarkovState(label="next", load_scale=1.2)]]
    profiles = {
        (0, 0): [NoiseProfile(_synthetic_day(1, 1.0, 0.8, 0.4), 1.0)],
        (1, 0): [NoiseProfile(_synthetic_day(2, 1.0, 0.7, 0.3), 1.0)],
    }
    return build_markov_chain(stages, None, profiles, name="deterministic")


ALL_FACTORS = "GNHSWBPLDFR"
# investment options whose flags are binary or integer
DISCRETE_TECHS = ("B", "P", "R", "L", "D", "F")


def _rated_day(index: int, load: float, solar: float, wind: float, rating: float) -> DayVector:
    day = _synthetic_day(index, load, solar, wind)
    t = np.arange(HOURS)
    ratings = np.column_stack([rating * (1.0 + 0.1 * np.cos(t)), np.full(HOURS, rating)])
    return DayVector(index, np.hstack([day.values, ratings]), SYNTHETIC_VARIABLES + ("dtr:L1", "dtr:L3"))


@pytest.fixture
def all_factor_network() -> Network:
    """Three buses with a candidate for every planning factor: batteries at bus 2,
    pumped hydro at bus 3, a retrofittable coal unit, a candidate line with DTR
    and an SSSC on the first corridor."""
    return Network(
        name="three-bus-all",
        buses=[
            Bus(id="1", avg_load=0.4, max_new_connection=1.5, battery_candidate=False),
            Bus(id="2", avg_load=0.5, max_new_connection=1.5),
            Bus(id="3", avg_load=0.3, max_new_connection=1.5, battery_candidate=False, hydro_candidate=True),
        ],
        rights_of_way=[
            RightOfWay(id="L1", from_bus="1", to_bus="2", length=80.0, reactance=0.1, has_existing_line=True,
                       static_rating_existing=0.4, dtr_rating_existing="dtr:L1", sssc_cut_in=0.1),
            RightOfWay(id="L2", from_bus="2", to_bus="3", length=60.0, reactance=0.1, has_existing_line=True,
                       static_rating_existing=0.4, dtr_allowed=False, sssc_allowed=False),
            RightOfWay(id="L3", from_bus="1", to_bus="3", length=90.0, reactance=0.12, has_existing_line=False,
                       static_rating_new=0.5, dtr_rating_new="dtr:L3", candidate_line_allowed=True,
                       sssc_allowed=False),
        ],
        generators=[
            ExistingGenerator(id="coal", bus="1", p_max=0.8, ramp_up=0.4, ramp_down=-0.4, emissions_pre=10.0,
                              emissions_post=2.0, cost_pre=3.0, cost_post=4.0, retrofit_allowed=True),
            ExistingGenerator(id="gas", bus="3", p_max=0.6, ramp_up=0.6, ramp_down=-0.6,
                              emissions_pre=4.0, cost_pre=6.0),
        ],
        zones=[
            VresZone(id="s1", kind="solar", bus="2", area_available=3.0),
            VresZone(id="w1", kind="wind", bus="3", area_available=30.0),
        ],
    )


@pytest.fixture
def all_factor_catalog() -> TechnologyCatalog:
    return TechnologyCatalog(
        technologies={
            "G": TechnologyCost(capex=60.0, fixed_om=1.0, variable_cost=7.0, lifetime=30.0),
            "N": TechnologyCost(capex=90.0, fixed_om=2.0, variable_cost=2.0, ramp_up_factor=0.3,
                                ramp_down_factor=-0.3, lifetime=60.0),
            "H": TechnologyCost(capex=50.0, fixed_om=1.0, variable_cost=9.0, lifetime=30.0),
            "S": TechnologyCost(capex=40.0, fixed_om=0.5, footprint=2.0, lifetime=30.0),
            "W": TechnologyCost(capex=55.0, fixed_om=1.0, footprint=30.0, lifetime=30.0),
            "B": TechnologyCost(capex=20.0, lifetime=30.0),
            "P": TechnologyCost(capex=30.0, lifetime=60.0),
            "R": TechnologyCost(capex=15.0, lifetime=30.0),
            "L": TechnologyCost(capex_per_km=0.3, lifetime=60.0),
            "D": TechnologyCost(capex=2.0, capex_per_km=0.01, lifetime=30.0),
            "F": TechnologyCost(capex=3.0, lifetime=30.0),
        },
        battery=BatterySpec(ch_max=0.3, di_max=0.3, soc_min=0.1, soc_max=1.0),
        hydro=HydroSpec(sigma_t=0.9, sigma_p=0.85, v_upper_max=2.0, v_lower_max=2.0,
                        v_upper_0=1.0, v_lower_0=1.0, w_max=0.3),
        sssc_max_units=4,
    )


def _all_factor_horizon(n_stages: int) -> PlanningHorizon:
    return PlanningHorizon(n_stages=n_stages, years_per_stage=5.0, co2_targets=[60.0, 40.0, 20.0][:n_stages],
                           voll_per_mwh=1.0, hours=HOURS, days_per_stage=10.0)


@pytest.fixture
def all_factor_ctx(all_factor_network, all_factor_catalog) -> FormulationContext:
    """Two stages, every factor enabled."""
    return FormulationContext.create(all_factor_network, all_factor_catalog, _all_factor_horizon(2), ALL_FACTORS)


@pytest.fixture
def all_factor_chain():
    """Root with two profiles, then a low and a high state."""
    stages = [
        [MarkovState(label="base")],
        [MarkovState(label="low", load_scale=0.9),
         MarkovState(label="high", load_scale=1.3, tech_cost_scale={"S": 0.8})],
    ]
    profiles = {
        (0, 0): [NoiseProfile(_rated_day(1, 1.0, 0.8, 0.4, 0.6), 0.5),
                 NoiseProfile(_rated_day(2, 0.9, 0.5, 0.6, 0.5), 0.5)],
        (1, 0): [NoiseProfile(_rated_day(3, 0.9, 0.6, 0.5, 0.6), 1.0)],
        (1, 1): [NoiseProfile(_rated_day(4, 1.2, 0.9, 0.2, 0.4), 1.0)],
    }
    return build_markov_chain(stages, [[[0.4, 0.6]]], profiles, name="all-factor")


@pytest.fixture
def three_stage_ctx(all_factor_network, all_factor_catalog) -> FormulationContext:
    return FormulationContext.create(all_factor_network, all_factor_catalog, _all_factor_horizon(3), ALL_FACTORS)


@pytest.fixture
def three_stage_chain():
    """Three stages, two Markov states after the root and two root profiles.

    Discrete options are only affordable at the root; later states price them
    out, so the later stage problems have no integrality gap.
    """
    priced_out = {t: 1e6 for t in DISCRETE_TECHS}
    stages = [
        [MarkovState(label="base", tech_cost_scale={"B": 1e6, "F": 1e6})],
        [MarkovState(label="low", load_scale=0.9, tech_cost_scale=priced_out),
         MarkovState(label="high", load_scale=1.3, tech_cost_scale={**priced_out, "S": 0.8})],
        [MarkovState(label="low", load_scale=1.0, tech_cost_scale=priced_out),
         MarkovState(label="high", load_scale=1.5, fuel_cost_scale=1.4, tech_cost_scale=priced_out)],
    ]
    profiles = {
        (0, 0): [NoiseProfile(_rated_day(1, 1.0, 0.8, 0.4, 0.6), 0.5),
                 NoiseProfile(_rated_day(2, 0.9, 0.5, 0.6, 0.5), 0.5)],
        (1, 0): [NoiseProfile(_rated_day(3, 0.9, 0.6, 0.5, 0.6), 1.0)],
        (1, 1): [NoiseProfile(_rated_day(4, 1.2, 0.9, 0.2, 0.4), 1.0)],
        (2, 0): [NoiseProfile(_rated_day(5, 1.0, 0.7, 0.4, 0.5), 1.0)],
        (2, 1): [NoiseProfile(_rated_day(6, 1.3, 0.4, 0.7, 0.5), 1.0)],
    }
    transitions = [[[0.4, 0.6]], [[0.7, 0.3], [0.4, 0.6]]]
    return build_markov_chain(stages, transitions, profiles, name="three-stage")


def ring_network(n_buses: int, n_zones: int, seed: int = 0) -> Network:
    """Buses 0.5 degrees apart on a meridian, joined in a ring of existing lines,
    gas units on every fifth bus and VRES zones dealt round-robin over the buses."""
    rng = np.random.default_rng(seed)
    ids = [f"b{k + 1}" for k in range(n_buses)]
    latitude = [50.0 + 0.5 * k for k in range(n_buses)]
    buses = [Bus(id=b, avg_load=float(rng.uniform(0.2, 0.5)), max_new_connection=2.0,
                 latitude=latitude[k], longitude=-114.0) for k, b in enumerate(ids)]
    rows = [RightOfWay(id=f"R{k + 1}", from_bus=ids[k], to_bus=ids[(k + 1) % n_buses], length=55.0,
                       reactance=0.1, has_existing_line=True, static_rating_existing=1.0, sssc_allowed=False)
            for k in range(n_buses)]
    generators = [ExistingGenerator(id=f"gas-{k + 1}", bus=ids[k], p_max=1.5, ramp_up=1.0, ramp_down=-1.0,
                                    emissions_pre=40.0, cost_pre=5.0)
                  for k in range(0, n_buses, 5)]
    zones = []
    for z in range(n_zones):
        k = z % n_buses
        solar = z % 2 == 0
        zones.append(VresZone(
            id=f"z{z + 1}", kind="solar" if solar else "wind", bus=ids[k],
            area_available=float(rng.uniform(0.5, 3.0) if solar else rng.uniform(5.0, 45.0)),
            profile_key="solar:s1" if solar else "wind:w1",
            latitude=latitude[k] + 0.01, longitude=-114.0,
        ))
    return Network(name=f"ring-{n_buses}", buses=buses, rights_of_way=rows, generators=generators, zones=zones)


@pytest.fixture
def twenty_bus_network() -> Network:
    return ring_network(20, 80)
