import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from main import build_parser
from src.action_handler import PlannerError
from src.actions.expost_actions import ExpostEvaluator, expost_evaluate
from src.actions.plot_actions import SCHEMAS, emit_plot_data, read_table
from src.actions.voss_actions import compute_voss, voss_from_values
from src.actions.zone_actions import ZoneSample, summarize, zone_sweep
from src.backends.base_backend import PlanSolution
from src.backends.monolithic_backend import solve_monolithic
from src.cli import EXIT_OK, EXIT_VALIDATION, run_verb
from src.grid.loader import save_network
from src.planner import TransitionPlanner, preset_factors
from src.scenarios.clustering import DayVector, NoiseProfile
from src.solvers import get_engine
from src.types import ConfigurationError

CASES_DIR = Path(__file__).resolve().parent.parent / "cases"

TINY = CASES_DIR / "tiny.json"


def _tiny(tmp_path, **overrides):
    return TransitionPlanner(TINY, overrides={"relax_integrality": True, "output_dir": str(tmp_path), **overrides})


@pytest.fixture
def planner(tmp_path):
    return _tiny(tmp_path)


@pytest.fixture
def solved(planner):
    return planner, planner.solve(write=True)


def _run(*argv):
    return run_verb(build_parser().parse_args([str(a) for a in argv]))


def test_voss_is_difference_of_eev_and_rp():
    assert voss_from_values(13.56, 15.73) == pytest.approx(2.17)


def test_stochastic_solution_is_worth_at_least_nothing(planner):
    result = compute_voss(planner)
    assert result.voss >= -1e-6 * max(1.0, abs(result.rp))
    saved = json.loads((planner.output_dir / "voss.json").read_text())
    assert saved["voss"] == pytest.approx(result.voss)


def _case_without_load_series(tmp_path):
    """The tiny case with renamed buses, so no day column matches a bus, and a
    single scenario path whose second stage scales load by 1.2."""
    for name in ("tiny.json", "tiny-catalog.json", "tiny-horizon.json", "tiny-days.csv"):
        shutil.copy(CASES_DIR / name, tmp_path / name)
    network = json.loads((CASES_DIR / "tiny-network.json").read_text())
    rename = {"1": "north", "2": "south"}
    for bus in network["buses"]:
        bus["id"] = rename[bus["id"]]
    for row in network["rights_of_way"]:
        row["from_bus"], row["to_bus"] = rename[row["from_bus"]], rename[row["to_bus"]]
    for item in network["generators"] + network["zones"]:
        item["bus"] = rename[item["bus"]]
    (tmp_path / "tiny-network.json").write_text(json.dumps(network))
    (tmp_path / "tiny-scenarios.json").write_text(json.dumps({
        "name": "single-path", "day_file": "tiny-days.csv",
        "stages": [[{"label": "base"}], [{"label": "next", "load_scale": 1.2}]],
        "profiles": [{"stage": 1, "state": "base", "day": 1, "weight": 1.0},
                     {"stage": 2, "state": "next", "day": 2, "weight": 1.0}],
    }))
    return tmp_path / "tiny.json"


def test_expected_value_problem_keeps_the_load_scale_of_buses_without_series(tmp_path):
    case = _case_without_load_series(tmp_path)
    planner = TransitionPlanner(case, overrides={"relax_integrality": True, "output_dir": str(tmp_path / "out")})
    result = compute_voss(planner, write=False)
    # one path and one profile per stage: the expected-value problem is the recourse problem
    assert result.ev == pytest.approx(result.rp, rel=1e-6)
    assert result.voss == pytest.approx(0.0, abs=1e-6 * max(1.0, abs(result.rp)))


def test_relaxed_solve_writes_results(solved):
    planner, outcome = solved
    assert outcome.status == "optimal"
    assert outcome.max_violation <= 1e-6
    directory = planner.output_dir
    for name in ("summary.json", "solution.json", "allocations.csv", "costs.csv", "curtailment.csv"):
        assert (directory / name).exists()
    summary = json.loads((directory / "summary.json").read_text())
    assert summary["case"] == "tiny"
    assert "expected_value_axis" in summary


def test_cost_table_covers_both_stages(solved):
    planner, outcome = solved
    costs = read_table("costs", planner.output_dir)
    assert list(costs.columns) == SCHEMAS["costs"]
    assert set(costs["stage"]) == {1, 2}
    solution = outcome.solution
    assert solution.expected_cost() == pytest.approx(outcome.objective, rel=1e-6)


def test_empty_tables_keep_their_headers(planner, tmp_path):
    written = emit_plot_data(planner, solution=PlanSolution("mono", "optimal", 0.0, 0.0), directory=tmp_path)
    curtailment = read_table("curtailment", tmp_path)
    assert curtailment.empty
    assert list(curtailment.columns) == SCHEMAS["curtailment"]
    assert set(written) == {"allocations", "costs", "curtailment", "training"}


def test_saved_solution_passes_report(solved):
    planner, _ = solved
    report = planner.perform_action("report")
    assert report.ok
    assert (planner.output_dir / "verification.json").exists()


def test_report_without_solution_is_a_planner_error(planner):
    with pytest.raises(PlannerError):
        planner.perform_action("report")


def test_expost_replays_in_sample_operations(solved):
    planner, outcome = solved
    evaluator = ExpostEvaluator(planner.ctx, planner.chain, planner.config)
    for record in outcome.solution.records:
        profiles = planner.chain.node_profiles(record.stage, record.state)
        replayed = [evaluator.evaluate(record, p, f"o{o}") for o, p in enumerate(profiles)]
        expected = sum(p.weight * r.operating_cost for p, r in zip(profiles, replayed))
        assert expected == pytest.approx(record.operations, rel=1e-5, abs=1e-6)
        assert replayed[0].investment_cost == pytest.approx(record.investment, rel=1e-6, abs=1e-6)


def test_expost_of_a_still_day_costs_nothing(solved):
    planner, outcome = solved
    record = next(r for r in outcome.solution.records if r.stage == 1)
    variables = ("load:1", "load:2", "solar:s1", "wind:w1", "dtr:L1")
    still = NoiseProfile(DayVector(99, np.zeros((4, len(variables))), variables), 1.0)
    result = ExpostEvaluator(planner.ctx, planner.chain, planner.config).evaluate(record, still, "still")
    assert result.operating_cost == pytest.approx(0.0, abs=1e-9)
    assert result.shedding == pytest.approx(0.0, abs=1e-9)


def test_expost_problems_are_cached_by_day_contents(solved):
    planner, outcome = solved
    record = next(r for r in outcome.solution.records if r.stage == 1)
    variables = ("load:1", "load:2", "solar:s1", "wind:w1", "dtr:L1")
    evaluator = ExpostEvaluator(planner.ctx, planner.chain, planner.config)

    still = evaluator.evaluate(record, NoiseProfile(DayVector(7, np.zeros((4, 5)), variables), 1.0), "a")
    again = evaluator.evaluate(record, NoiseProfile(DayVector(7, np.zeros((4, 5)), variables), 1.0), "b")
    assert len(evaluator._cache) == 1
    assert again.operating_cost == pytest.approx(still.operating_cost)

    # same index, different weather: a separate problem even if the old day object is gone
    evaluator.evaluate(record, NoiseProfile(DayVector(7, np.full((4, 5), 0.5), variables), 1.0), "c")
    assert len(evaluator._cache) == 2


def test_expost_action_writes_one_row_per_realization(solved):
    planner, outcome = solved
    results = expost_evaluate(planner, solution=outcome.solution)
    table = read_table("expost", planner.output_dir)
    assert len(table) == len(results) > 0
    assert list(table.columns) == SCHEMAS["expost"]


def test_expost_out_of_sample_days(solved):
    planner, outcome = solved
    results = expost_evaluate(planner, solution=outcome.solution, days_file=CASES_DIR / "tiny-days.csv",
                              write=False)
    assert {r.day for r in results} == {1, 2, 3, 4}


def test_zone_summary_uses_sample_deviation():
    rows = summarize([ZoneSample(5, 0, 1.0, 0.1, 10), ZoneSample(5, 1, 3.0, 0.3, 10), ZoneSample(20, 0, 2.0, 1.0, 40)])
    assert [r.zones for r in rows] == [5, 20]
    assert rows[0].mean_cost == pytest.approx(2.0)
    assert rows[0].std_cost == pytest.approx(np.sqrt(2.0))
    assert rows[1].std_cost == 0.0


def test_zone_sweep_on_all_zones_is_repeatable(planner):
    rows = zone_sweep(planner, sizes=[1, 2], repetitions=2)
    assert [r.zones for r in rows] == [1, 2]
    full = rows[-1]
    assert full.std_cost == pytest.approx(0.0, abs=1e-6 * max(1.0, abs(full.mean_cost)))
    assert read_table("zone_sweep", planner.output_dir).shape[0] == 2


def test_presets_nest():
    a, b, f = (preset_factors(c) for c in "ABF")
    assert a["G"] and not a["S"]
    assert b["S"] and b["W"] and not b["R"]
    assert all(f.values())
    with pytest.raises(ConfigurationError):
        preset_factors("Z")


def test_overrides_apply_on_top_of_the_run_file(tmp_path):
    planner = TransitionPlanner(CASES_DIR / "aeso6.json",
                                overrides={"case": "B", "factors": {"W": False}, "seed": 7, "output_dir": str(tmp_path)})
    assert planner.enabled == ["G", "N", "H", "S"]
    assert planner.config.seed == 7
    assert planner.output_dir == tmp_path / "aeso6"


def test_uncatalogued_factor_is_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="missing from catalog.*: N$"):
        _tiny(tmp_path, factors={"N": True})


def test_preset_beyond_the_catalog_is_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match=r"B \(battery\)"):
        _tiny(tmp_path, case="D")


def test_invalid_override_is_a_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError):
        _tiny(tmp_path, backend="cplex")


def test_disabling_every_generator_is_rejected(tmp_path):
    with pytest.raises(ConfigurationError):
        _tiny(tmp_path, factors={"G": False, "S": False, "W": False})


def test_scratch_directory_comes_from_the_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("PLANNER_SCRATCH_DIR", str(tmp_path / "scratch"))
    planner = TransitionPlanner(TINY)
    assert planner.output_dir == tmp_path / "scratch" / "tiny"


def test_unknown_action_returns_none(planner):
    assert planner.perform_action("nonexistent") is None


def test_cli_rejects_an_invalid_network(tmp_path):
    path = tmp_path / "net.json"
    path.write_text(json.dumps({"buses": [{"id": "1", "avg_load": 0.1}, {"id": "2", "avg_load": 0.1}],
                                "rights_of_way": [{"id": "L1", "from_bus": "1", "to_bus": "2", "length": 1.0,
                                                   "reactance": 0.0, "has_existing_line": True}]}))
    assert _run("validate", "--network", path) == EXIT_VALIDATION


def test_cli_accepts_the_shipped_network(cases_dir):
    assert _run("validate", "--network", cases_dir / "aeso6-network.json") == EXIT_OK


def test_cli_missing_case_is_a_validation_failure(tmp_path):
    assert _run("solve", tmp_path / "missing.json") == EXIT_VALIDATION


def test_cli_report_without_solution(tmp_path):
    assert _run("report", TINY, "--output", tmp_path) == EXIT_VALIDATION


def test_cli_solve_then_report(tmp_path):
    assert _run("solve", TINY, "--relax", "--output", tmp_path) == EXIT_OK
    assert (tmp_path / "tiny" / "solution.json").exists()
    assert _run("report", TINY, "--relax", "--output", tmp_path) == EXIT_OK


def test_cli_rejects_a_bad_factor_flag(tmp_path):
    assert _run("solve", TINY, "--factor", "B=maybe", "--output", tmp_path) == EXIT_VALIDATION


def test_cli_clusters_days(tmp_path, cases_dir):
    out = tmp_path / "cluster.json"
    assert _run("scenarios", "cluster", cases_dir / "tiny-days.csv", "--k", 2, "--output", out) == EXIT_OK
    data = json.loads(out.read_text())
    assert len(data["medoids"]) == 2
    assert sum(data["weights"]) == pytest.approx(1.0)


def test_cli_rates_lines_from_weather(tmp_path):
    weather = tmp_path / "weather.csv"
    weather.write_text(
        "cell_id,timestamp,latitude,longitude,ambient_temp,wind_speed,wind_direction,direct_flux,diffuse_flux\n"
        "c1,2023-07-01 12:00,51.0,-114.0,25.0,2.0,0.0,700.0,100.0\n"
        "c1,2023-07-01 13:00,51.0,-114.0,26.0,3.0,0.0,650.0,100.0\n"
    )
    out = tmp_path / "ratings.csv"
    assert _run("physics", "dtr", weather, "--output", out) == EXIT_OK
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "cell_id,timestamp,rating"
    assert len(lines) == 3


@pytest.mark.slow
def test_sddp_backend_bound_stays_below_extensive_optimum(tmp_path):
    planner = _tiny(tmp_path, backend="sddp")
    outcome = planner.solve(write=True)
    assert outcome.status in ("optimal", "iteration-limit")
    mono = solve_monolithic(planner.ctx, planner.chain, planner.config, get_engine("native"))
    assert outcome.best_bound <= mono.objective + 1e-6 * max(1.0, abs(mono.objective))
    assert not read_table("training", planner.output_dir).empty
    assert planner.perform_action("report").ok


@pytest.mark.slow
def test_zone_sweep_on_a_twenty_bus_ring(tmp_path, twenty_bus_network):
    for name in ("tiny.json", "tiny-catalog.json", "tiny-horizon.json", "tiny-scenarios.json", "tiny-days.csv"):
        shutil.copy(CASES_DIR / name, tmp_path / name)
    save_network(twenty_bus_network, tmp_path / "tiny-network.json")
    planner = TransitionPlanner(tmp_path / "tiny.json", overrides={
        "relax_integrality": True, "engine": "highs", "output_dir": str(tmp_path / "out")})

    rows = zone_sweep(planner, sizes=[80, 5, 20], repetitions=10, seed=3)

    assert [r.zones for r in rows] == [5, 20, 80]
    scale = max(1.0, abs(rows[0].mean_cost))
    # subsets within a repetition are nested, so more zones never cost more
    assert rows[1].mean_cost <= rows[0].mean_cost + 1e-6 * scale
    assert rows[2].mean_cost <= rows[1].mean_cost + 1e-6 * scale
    # every repetition of the full set solves the same problem
    assert rows[2].std_cost <= 1e-6 * scale
    assert rows[2].std_cost <= rows[0].std_cost + 1e-6 * scale
    assert rows[0].variables < rows[1].variables < rows[2].variables
    table = read_table("zone_sweep", planner.output_dir)
    assert list(table.columns) == SCHEMAS["zone_sweep"]
    assert table["zones"].tolist() == [5, 20, 80]
