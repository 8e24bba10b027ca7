import itertools
import math

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp

from src.formulation.linearize import link_product
from src.formulation.model import LinearProblem, VariableIndex
from src.solvers import get_engine
from src.solvers.branch_bound import MilpStatus, solve_milp
from src.solvers.simplex import solve_lp
from src.solvers.standard_form import EQ, GE, LE, StandardFormLP

VALUES = [10.0, 13.0, 7.0, 8.0, 12.0, 6.0, 9.0, 4.0]
WEIGHTS = [5.0, 6.0, 3.0, 4.0, 6.0, 2.0, 5.0, 1.0]
CAPACITY = 17.0


def _knapsack() -> StandardFormLP:
    n = len(VALUES)
    return StandardFormLP.from_triples(
        VALUES, [(0, j, w) for j, w in enumerate(WEIGHTS)], [LE], [CAPACITY],
        lb=np.zeros(n), ub=np.ones(n), integrality=np.ones(n, dtype=bool), maximize=True,
    )


def _brute_force_knapsack() -> float:
    best = 0.0
    for pick in itertools.product((0, 1), repeat=len(VALUES)):
        if np.dot(pick, WEIGHTS) <= CAPACITY:
            best = max(best, float(np.dot(pick, VALUES)))
    return best


def test_continuous_problem_matches_simplex():
    lp = StandardFormLP.from_triples([-1.0, -2.0], [(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)], [LE, LE], [4.0, 3.0])
    result = solve_milp(lp)
    assert result.status is MilpStatus.OPTIMAL
    assert result.objective == pytest.approx(solve_lp(lp).objective)


def test_knapsack_matches_enumeration():
    result = solve_milp(_knapsack())
    assert result.status is MilpStatus.OPTIMAL
    assert result.objective == pytest.approx(_brute_force_knapsack())
    assert _knapsack().integrality_violation(result.x) <= 1e-9
    # maximization reports the bound from above
    assert result.best_bound >= result.objective - 1e-9


def test_parallel_workers_find_the_same_optimum():
    result = solve_milp(_knapsack(), workers=3)
    assert result.objective == pytest.approx(_brute_force_knapsack())


def test_bound_log_is_monotone_for_minimization():
    lp = _knapsack()
    minimized = StandardFormLP(c=-lp.c, A=lp.A, senses=lp.senses, b=lp.b, lb=lp.lb, ub=lp.ub,
                               integrality=lp.integrality)
    result = solve_milp(minimized)
    assert all(b2 >= b1 - 1e-9 for b1, b2 in zip(result.bound_log, result.bound_log[1:]))


def test_node_limit_is_reported():
    result = solve_milp(_knapsack(), node_limit=1, rel_gap=0.0)
    assert result.status in (MilpStatus.NODE_LIMIT, MilpStatus.OPTIMAL)
    if result.status is MilpStatus.NODE_LIMIT:
        assert result.status.is_limit


def test_infeasible_integer_problem():
    # 2x = 1 with x integer
    lp = StandardFormLP.from_triples([1.0], [(0, 0, 2.0)], ["E"], [1.0], lb=[0.0], ub=[3.0],
                                     integrality=[True])
    assert solve_milp(lp).status is MilpStatus.INFEASIBLE


def test_highs_milp_agrees_on_knapsack():
    result = get_engine("highs").solve_milp(_knapsack())
    assert result.objective == pytest.approx(_brute_force_knapsack())


def test_product_of_two_set_binaries_is_forced_to_one():
    problem = LinearProblem()
    line = problem.add_var(VariableIndex("x:L"), 0.0, 1.0, True)
    dtr = problem.add_var(VariableIndex("x:D"), 0.0, 1.0, True)
    product = problem.add_var(VariableIndex("v"), 0.0, 1.0, True)
    problem.fix(line, 1.0)
    problem.fix(dtr, 1.0)
    link_product(problem, product, [line], [dtr])
    problem.add_cost(product, 1.0)
    result = solve_milp(problem.to_standard_form())
    assert result.status is MilpStatus.OPTIMAL
    assert result.x[product] == pytest.approx(1.0)


def _random_binary_milp(seed: int, parity_row: bool = False) -> StandardFormLP:
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(4, 13)), int(rng.integers(2, 6))
    A = rng.uniform(-2.0, 5.0, size=(m, n))
    x0 = rng.integers(0, 2, size=n)
    b = A @ x0 + rng.uniform(0.0, 2.0, size=m) * (rng.random(m) < 0.8)
    senses = [LE] * m
    if parity_row:
        # 2(x0 + x1 + x2) = 3 has no binary solution
        A = np.vstack([A, np.r_[2.0, 2.0, 2.0, np.zeros(n - 3)]])
        b = np.r_[b, 3.0]
        senses.append(EQ)
    triples = [(i, j, A[i, j]) for i, j in zip(*np.nonzero(A))]
    return StandardFormLP.from_triples(rng.uniform(-5.0, 5.0, size=n), triples, senses, b,
                                       lb=np.zeros(n), ub=np.ones(n), integrality=np.ones(n, dtype=bool))


def _enumerate(lp: StandardFormLP) -> float:
    points = np.array(list(itertools.product((0.0, 1.0), repeat=lp.n_cols)))
    activity = points @ lp.A.toarray().T
    le, eq = lp.senses == LE, lp.senses == EQ
    feasible = np.all(activity[:, le] <= lp.b[le] + 1e-9, axis=1)
    feasible &= np.all(np.abs(activity[:, eq] - lp.b[eq]) <= 1e-9, axis=1)
    if not feasible.any():
        return math.inf
    return float((points[feasible] @ lp.c).min())


@pytest.mark.parametrize("seed", range(50))
def test_random_binary_programs_match_enumeration(seed):
    lp = _random_binary_milp(seed)
    result = solve_milp(lp, rel_gap=0.0)
    assert result.status is MilpStatus.OPTIMAL
    assert result.objective == pytest.approx(_enumerate(lp), abs=1e-6)
    assert lp.integrality_violation(result.x) <= 1e-9
    assert lp.max_violation(result.x) <= 1e-5
    assert result.best_bound <= result.objective + 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_binary_programs_with_an_odd_parity_row_are_infeasible(seed):
    lp = _random_binary_milp(500 + seed, parity_row=True)
    assert _enumerate(lp) == math.inf
    assert solve_milp(lp, rel_gap=0.0).status is MilpStatus.INFEASIBLE


@pytest.mark.parametrize("seed", range(20))
def test_mixed_binary_programs_match_scipy_milp(seed):
    rng = np.random.default_rng(700 + seed)
    n_bin, n_cont, m = 6, 4, 5
    n = n_bin + n_cont
    A = rng.uniform(-2.0, 4.0, size=(m, n))
    x0 = np.r_[rng.integers(0, 2, size=n_bin), rng.uniform(0.0, 5.0, size=n_cont)]
    senses = rng.choice([LE, GE], size=m)
    slack = rng.uniform(0.0, 2.0, size=m)
    b = np.where(senses == LE, A @ x0 + slack, A @ x0 - slack)
    lb, ub = np.zeros(n), np.r_[np.ones(n_bin), np.full(n_cont, 5.0)]
    integrality = np.r_[np.ones(n_bin, dtype=bool), np.zeros(n_cont, dtype=bool)]
    c = rng.uniform(-4.0, 4.0, size=n)
    lp = StandardFormLP.from_triples(c, [(i, j, A[i, j]) for i in range(m) for j in range(n)], list(senses), b,
                                     lb=lb, ub=ub, integrality=integrality)

    reference = milp(c, integrality=integrality.astype(int), bounds=Bounds(lb, ub),
                     constraints=[LinearConstraint(A, np.where(senses == LE, -np.inf, b),
                                                   np.where(senses == GE, np.inf, b))],
                     options={"mip_rel_gap": 0.0})
    assert reference.status == 0
    result = solve_milp(lp, rel_gap=0.0)
    assert result.status is MilpStatus.OPTIMAL
    assert result.objective == pytest.approx(reference.fun, abs=1e-5)
    assert lp.max_violation(result.x) <= 1e-5
