import json

import pytest

from src.grid.geo import great_circle_km, nearest_bus
from src.grid.loader import (
    NetworkParseError, NetworkValidationError, load_catalog, load_horizon, load_network, save_network,
)
from src.grid.validation import validate_catalog, validate_horizon, validate_network
from src.types import (
    Bus, ConfigurationError, ExistingGenerator, Network, PlanningHorizon, RightOfWay, TechnologyCatalog, VresZone,
)


def _codes(report):
    return {v.code for v in report.violations}


def test_aeso6_network_loads_clean(cases_dir):
    net = load_network(cases_dir / "aeso6-network.json")
    assert len(net.buses) == 6
    assert len(net.rights_of_way) == 10
    assert sum(r.has_existing_line for r in net.rights_of_way) == 6
    report = validate_network(net)
    assert report.ok
    assert report.connected


def test_aeso6_catalog_and_horizon_validate(cases_dir):
    assert validate_catalog(load_catalog(cases_dir / "aeso6-catalog.json")).ok
    horizon = load_horizon(cases_dir / "aeso6-horizon.json")
    assert validate_horizon(horizon).ok
    assert horizon.n_stages == 3


def test_every_preset_is_catalogued_for_aeso6(cases_dir):
    catalog = load_catalog(cases_dir / "aeso6-catalog.json")
    assert validate_catalog(catalog, enabled="GNHSWBPLDFR").ok


def test_enabled_factor_without_catalog_entry(cases_dir):
    catalog = load_catalog(cases_dir / "tiny-catalog.json")
    report = validate_catalog(catalog, enabled="GSWN")
    assert _codes(report) == {"missing-technology"}
    assert [v.subject for v in report.violations] == ["technology N"]
    with pytest.raises(ConfigurationError):
        catalog.cost("N")


def test_storage_factors_need_their_specs():
    assert TechnologyCatalog(technologies={"B": {}, "P": {}}).missing_for("BP") == ["B (battery)", "P (hydro)"]


def test_empty_network_is_a_structural_violation():
    report = validate_network(Network(buses=[]))
    assert "empty" in _codes(report)
    assert report.structural()


def test_zone_on_unknown_bus_is_dangling():
    net = Network(buses=[Bus(id="1", avg_load=0.1)],
                  zones=[VresZone(id="z1", kind="solar", bus="X", area_available=1.0)])
    report = validate_network(net)
    assert "dangling-reference" in _codes(report)
    assert any("X" in v.message for v in report.violations)


def test_zero_reactance_is_rejected():
    net = Network(
        buses=[Bus(id="1", avg_load=0.1), Bus(id="2", avg_load=0.1)],
        rights_of_way=[RightOfWay(id="L1", from_bus="1", to_bus="2", length=10.0, reactance=0.0,
                                  has_existing_line=True, static_rating_existing=1.0)],
    )
    assert "reactance" in _codes(validate_network(net))


def test_generator_with_p_min_above_p_max():
    net = Network(
        buses=[Bus(id="1", avg_load=0.1)],
        generators=[ExistingGenerator(id="g", bus="1", p_min=2.0, p_max=1.0, ramp_up=1.0, ramp_down=-1.0)],
    )
    assert "bound-order" in _codes(validate_network(net))


def test_islands_only_warn():
    net = Network(buses=[Bus(id="1", avg_load=0.1), Bus(id="2", avg_load=0.1)])
    report = validate_network(net)
    assert report.ok
    assert not report.connected
    assert report.warnings


def test_horizon_needs_one_target_per_stage():
    report = validate_horizon(PlanningHorizon(n_stages=3, co2_targets=[1.0, 2.0]))
    assert "shape" in _codes(report)


def test_parse_error_names_field_and_line(tmp_path):
    path = tmp_path / "net.json"
    path.write_text(json.dumps({"buses": [{"id": "1", "avg_load": "lots"}]}, indent=2))
    with pytest.raises(NetworkParseError) as info:
        load_network(path)
    assert "avg_load" in info.value.field
    assert info.value.line > 1


def test_structural_problems_stop_loading(tmp_path):
    path = tmp_path / "net.json"
    path.write_text(json.dumps({"buses": [{"id": "1", "avg_load": 0.1}, {"id": "1", "avg_load": 0.2}]}))
    with pytest.raises(NetworkValidationError):
        load_network(path)


def test_zones_without_bus_attach_to_nearest(tmp_path):
    data = {
        "buses": [
            {"id": "calgary", "avg_load": 0.1, "latitude": 51.05, "longitude": -114.07},
            {"id": "edmonton", "avg_load": 0.1, "latitude": 53.55, "longitude": -113.49},
        ],
        "zones": [{"id": "z", "kind": "wind", "area_available": 5.0, "latitude": 51.3, "longitude": -114.0}],
    }
    path = tmp_path / "net.json"
    path.write_text(json.dumps(data))
    net = load_network(path)
    assert net.zones[0].bus == "calgary"
    assert nearest_bus(net, 53.0, -113.5) == "edmonton"


def test_great_circle_distance_calgary_edmonton():
    assert great_circle_km(51.05, -114.07, 53.55, -113.49) == pytest.approx(280.0, rel=0.02)


def test_network_survives_a_json_round_trip(tmp_path, twenty_bus_network, all_factor_network):
    for net in (twenty_bus_network, all_factor_network):
        path = tmp_path / f"{net.name}.json"
        save_network(net, path)
        loaded = load_network(path)
        assert loaded.model_dump() == net.model_dump()
        assert [z.bus for z in loaded.zones] == [z.bus for z in net.zones]
