import json

import numpy as np
import pytest

from src.formulation.monolithic import build_monolithic
from src.sddp.policy import Cut, Policy, load_policy, save_policy
from src.sddp.train import (
    SddpModel, TrainOptions, check_stopping, enumerate_paths, evaluate_policy_exhaustive, load_warm_start,
    simulate_policy, train,
)
from src.solvers import get_engine
from src.solvers.branch_bound import MilpStatus
from src.solvers.simplex import LpStatus, solve_lp

RELAXED = dict(relax_integrality=True, stall_iterations=10, max_iterations=100, seed=3)


@pytest.fixture
def relaxed_model(three_bus_ctx, two_state_chain):
    return SddpModel(three_bus_ctx, two_state_chain)


@pytest.fixture
def relaxed_policy(relaxed_model):
    return train(relaxed_model, TrainOptions(**RELAXED))


def _extensive_relaxed_optimum(ctx, chain):
    mono = build_monolithic(ctx, chain)
    solution = solve_lp(mono.problem.to_standard_form().relaxed())
    assert solution.status is LpStatus.OPTIMAL
    return solution.objective


def test_lower_bound_reaches_extensive_form_optimum(relaxed_policy, three_bus_ctx, two_state_chain):
    optimum = _extensive_relaxed_optimum(three_bus_ctx, two_state_chain)
    assert relaxed_policy.lower_bound <= optimum + 1e-6 * max(1.0, abs(optimum))
    assert relaxed_policy.lower_bound == pytest.approx(optimum, rel=1e-4)


def test_logged_bound_never_decreases(relaxed_policy):
    bounds = relaxed_policy.bounds()
    assert len(bounds) >= 1
    assert all(b >= a for a, b in zip(bounds, bounds[1:]))


def test_cuts_underestimate_the_expected_child_value(relaxed_model, relaxed_policy, two_state_chain):
    options = TrainOptions(**RELAXED)
    rng = np.random.default_rng(9)
    dimension = len(relaxed_model.state_keys)
    cuts = relaxed_policy.pool(0, 0).snapshot()
    assert cuts
    for _ in range(4):
        x = rng.uniform(0.0, 0.7, dimension)
        expected = 0.0
        for s_next, p in two_state_chain.successors(0, 0):
            for o, profile in enumerate(two_state_chain.node_profiles(1, s_next)):
                child = relaxed_model.solve(relaxed_policy, 1, s_next, o, x, False, options)
                expected += p * profile.weight * child.objective
        for cut in cuts:
            assert cut.value(x) <= expected + 1e-6 * max(1.0, abs(expected))


def test_policy_cost_is_no_better_than_its_bound(relaxed_model, relaxed_policy):
    cost = evaluate_policy_exhaustive(relaxed_model, relaxed_policy, TrainOptions(**RELAXED))
    assert cost >= relaxed_policy.lower_bound - 1e-6 * max(1.0, abs(cost))


def test_same_seed_gives_the_same_run(three_bus_ctx, two_state_chain):
    options = TrainOptions(relax_integrality=True, stall_iterations=3, max_iterations=6, seed=11)
    first = train(SddpModel(three_bus_ctx, two_state_chain), options)
    second = train(SddpModel(three_bus_ctx, two_state_chain), options)
    assert first.bounds() == pytest.approx(second.bounds())
    assert [r.path for r in first.log] == [r.path for r in second.log]


def test_single_simulation_has_no_interval(relaxed_model, relaxed_policy):
    result = simulate_policy(relaxed_model, relaxed_policy, 1, seed=1, options=TrainOptions(**RELAXED))
    assert not result.ci_available
    assert result.ci_low is None and result.ci_high is None
    assert len(result.costs) == 1


def test_simulation_interval_brackets_the_mean(relaxed_model, relaxed_policy):
    result = simulate_policy(relaxed_model, relaxed_policy, 6, seed=2, options=TrainOptions(**RELAXED))
    assert result.ci_low <= result.mean <= result.ci_high


def test_paths_enumerate_to_unit_probability(two_state_chain):
    paths = enumerate_paths(two_state_chain)
    assert len(paths) == 2
    assert sum(p for _, p in paths) == pytest.approx(1.0)


def test_stopping_needs_a_full_window_of_small_improvements():
    options = TrainOptions(stall_iterations=2, stall_tolerance=1e-4)
    assert not check_stopping([0.0, 1.0, 2.0, 2.0], options)
    assert check_stopping([0.0, 1.0, 1.0, 1.0], options)
    assert not check_stopping([1.0, 1.0], options)


def test_stopping_measures_relative_improvement():
    options = TrainOptions(stall_iterations=1, stall_tolerance=1e-3)
    assert check_stopping([1000.0, 1000.5], options)
    assert not check_stopping([1000.0, 1002.0], options)


def test_invalid_options_are_rejected():
    with pytest.raises(ValueError):
        TrainOptions(stall_iterations=0)
    with pytest.raises(ValueError):
        TrainOptions(mode="eager")


def test_policy_file_keeps_cuts_and_log(relaxed_policy, relaxed_model, tmp_path):
    path = save_policy(relaxed_policy, tmp_path / "policy.json")
    loaded = load_policy(path, relaxed_model.state_keys)
    assert loaded.cut_count == relaxed_policy.cut_count
    assert loaded.bounds() == pytest.approx(relaxed_policy.bounds())
    x = np.full(len(relaxed_model.state_keys), 0.2)
    assert loaded.cost_to_go(0, 0, x) == pytest.approx(relaxed_policy.cost_to_go(0, 0, x))


def test_policy_for_another_layout_is_refused(relaxed_policy, tmp_path):
    path = save_policy(relaxed_policy, tmp_path / "policy.json")
    with pytest.raises(ValueError):
        load_policy(path, ["G:1"])


def test_cut_with_wrong_dimension_is_refused():
    policy = Policy(state_keys=["a", "b"])
    with pytest.raises(ValueError):
        policy.add_cut(Cut(0, 0, 1.0, np.zeros(3), 1))


def test_cost_to_go_is_the_upper_envelope():
    policy = Policy(state_keys=["a"])
    policy.add_cut(Cut(0, 0, 1.0, np.array([2.0]), 1))
    policy.add_cut(Cut(0, 0, 4.0, np.array([-1.0]), 2))
    assert policy.cost_to_go(0, 0, np.array([0.0])) == pytest.approx(4.0)
    assert policy.cost_to_go(0, 0, np.array([3.0])) == pytest.approx(7.0)
    assert policy.cost_to_go(1, 0, np.array([3.0])) == 0.0


def test_warm_start_states_are_read_by_key(relaxed_model, tmp_path):
    keys = relaxed_model.state_keys
    path = tmp_path / "warm.json"
    path.write_text(json.dumps({"stages": [{keys[0]: 0.3}]}))
    states = load_warm_start(path, keys)
    assert states[0][0] == pytest.approx(0.3)
    assert states[0][1:].sum() == 0.0
    path.write_text(json.dumps({"stages": [{"nope": 1.0}]}))
    with pytest.raises(ValueError):
        load_warm_start(path, keys)


def test_warm_start_seeds_cuts_before_sampling(three_bus_ctx, two_state_chain):
    model = SddpModel(three_bus_ctx, two_state_chain)
    warm = [np.zeros(len(model.state_keys))]
    policy = train(model, TrainOptions(relax_integrality=True, stall_iterations=1, max_iterations=1,
                                       warm_start=warm))
    assert any(cut.iteration == 0 for cut in policy.pool(0, 0).snapshot())


def test_parallel_workers_reach_the_same_bound(three_bus_ctx, two_state_chain, relaxed_policy):
    options = TrainOptions(**{**RELAXED, "workers": 2})
    policy = train(SddpModel(three_bus_ctx, two_state_chain), options)
    assert policy.lower_bound == pytest.approx(relaxed_policy.lower_bound, rel=1e-4)


@pytest.mark.slow
def test_integer_bound_matches_the_extensive_form_with_every_factor(three_stage_ctx, three_stage_chain):
    engine = get_engine("highs")
    mono = build_monolithic(three_stage_ctx, three_stage_chain)
    assert mono.tree.n_paths == 4
    extensive = engine.solve_milp(mono.problem.to_standard_form())
    assert extensive.status is MilpStatus.OPTIMAL

    model = SddpModel(three_stage_ctx, three_stage_chain, engine)
    options = TrainOptions(stall_tolerance=1e-9, stall_iterations=20, max_iterations=150, seed=5)
    policy = train(model, options)
    assert policy.lower_bound <= extensive.objective + 1e-6 * max(1.0, abs(extensive.objective))
    assert policy.lower_bound == pytest.approx(extensive.objective, rel=1e-3)
    policy_cost = evaluate_policy_exhaustive(model, policy, options)
    assert policy_cost == pytest.approx(extensive.objective, rel=1e-3)
