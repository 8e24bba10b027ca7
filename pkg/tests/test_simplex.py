import logging

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linprog

from src.solvers import get_engine, simplex
from src.solvers.simplex import LpStatus, solve_lp
from src.solvers.standard_form import EQ, GE, LE, StandardFormError, StandardFormLP, farkas_gap


def test_single_bound_maximization_has_unit_dual():
    lp = StandardFormLP.from_triples([1.0], [(0, 0, 1.0)], [LE], [5.0], maximize=True)
    solution = solve_lp(lp)
    assert solution.status is LpStatus.OPTIMAL
    assert solution.x[0] == pytest.approx(5.0)
    assert solution.objective == pytest.approx(5.0)
    assert solution.duals[0] == pytest.approx(1.0)


def test_infeasible_lp_returns_farkas_certificate():
    lp = StandardFormLP.from_triples([1.0], [(0, 0, 1.0)], [LE], [-1.0])
    solution = solve_lp(lp)
    assert solution.status is LpStatus.INFEASIBLE
    assert solution.farkas is not None
    assert farkas_gap(lp, solution.farkas) > 0


def test_unbounded_lp_reports_ray():
    # min -x - y  s.t. x - y <= 1
    lp = StandardFormLP.from_triples([-1.0, -1.0], [(0, 0, 1.0), (0, 1, -1.0)], [LE], [1.0])
    solution = solve_lp(lp)
    assert solution.status is LpStatus.UNBOUNDED


def test_equality_and_ge_rows():
    # min x + 2y  s.t. x + y = 4, x >= 1, y >= 1.5
    lp = StandardFormLP.from_triples(
        [1.0, 2.0], [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (2, 1, 1.0)], [EQ, GE, GE], [4.0, 1.0, 1.5])
    solution = solve_lp(lp)
    assert solution.status is LpStatus.OPTIMAL
    assert solution.x == pytest.approx([2.5, 1.5])
    assert solution.objective == pytest.approx(5.5)


def _random_lp(rng: np.random.Generator, m: int, n: int) -> StandardFormLP:
    A = rng.uniform(-1.0, 2.0, size=(m, n))
    b = rng.uniform(1.0, 5.0, size=m)
    c = rng.uniform(-3.0, 1.0, size=n)
    triples = [(i, j, A[i, j]) for i in range(m) for j in range(n)]
    return StandardFormLP.from_triples(c, triples, [LE] * m, b, lb=np.zeros(n), ub=np.full(n, 10.0))


@pytest.mark.parametrize("seed", range(8))
def test_random_bounded_lps_match_reference_solver(seed):
    rng = np.random.default_rng(seed)
    lp = _random_lp(rng, 6, 8)
    reference = linprog(lp.c, A_ub=lp.A.toarray(), b_ub=lp.b, bounds=list(zip(lp.lb, lp.ub)), method="highs")
    solution = solve_lp(lp)
    assert solution.status is LpStatus.OPTIMAL
    assert solution.objective == pytest.approx(reference.fun, abs=1e-6)
    assert lp.max_violation(solution.x) <= 1e-7


@pytest.mark.parametrize("seed", range(5))
def test_optimal_duals_close_the_duality_gap(seed):
    lp = _random_lp(np.random.default_rng(100 + seed), 6, 8)
    solution = solve_lp(lp)
    assert solution.status is LpStatus.OPTIMAL
    assert solution.dual_objective == pytest.approx(solution.objective, abs=1e-6)
    # minimization with <= rows prices every row non-positively
    assert np.all(solution.duals <= 1e-9)


def test_warm_start_after_rhs_change_matches_cold_solve():
    lp = _random_lp(np.random.default_rng(7), 5, 6)
    first = solve_lp(lp, presolve=False)
    changed = lp.with_rhs(lp.b * 0.8)
    warm = solve_lp(changed, warm_start=first.basis)
    cold = solve_lp(changed)
    assert warm.status is LpStatus.OPTIMAL
    assert warm.objective == pytest.approx(cold.objective, abs=1e-7)


def test_highs_engine_agrees_with_native():
    lp = _random_lp(np.random.default_rng(11), 6, 8)
    native = get_engine("native").solve_lp(lp)
    highs = get_engine("highs").solve_lp(lp)
    assert highs.status is LpStatus.OPTIMAL
    assert highs.objective == pytest.approx(native.objective, abs=1e-6)


def test_unknown_engine_is_rejected():
    with pytest.raises(ValueError):
        get_engine("cplex")


def test_inverted_bounds_are_rejected():
    with pytest.raises(StandardFormError):
        StandardFormLP.from_triples([1.0], [(0, 0, 1.0)], [LE], [5.0], lb=[2.0], ub=[1.0])


def _mixed_lp(seed: int, open_column: bool = False) -> StandardFormLP:
    """Random LP feasible at a known point, mixing row senses, fixed columns,
    single-column rows and rows that are tight at that point."""
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(3, 9)), int(rng.integers(3, 11))
    A = rng.uniform(-2.0, 3.0, size=(m, n)) * (rng.random((m, n)) < 0.7)
    x0 = rng.uniform(0.0, 10.0, size=n)
    lb, ub = np.zeros(n), np.full(n, 10.0)
    fixed = rng.random(n) < 0.15
    c = rng.uniform(-3.0, 3.0, size=n)
    senses = rng.choice([LE, GE, EQ], size=m, p=[0.5, 0.3, 0.2])
    if open_column:
        # column 0 can grow forever while improving the objective
        fixed[0] = False
        ub[0], c[0] = np.inf, -1.0
        column = np.abs(A[:, 0]) + 0.5
        A[:, 0] = np.where(senses == LE, -column, np.where(senses == GE, column, 0.0))
    lb[fixed] = ub[fixed] = x0[fixed]

    singles = int(rng.integers(0, 3))
    first = 1 if open_column else 0
    single_cols = rng.integers(first, n, size=singles)
    single_coef = rng.choice([-2.0, -1.0, 1.0, 3.0], size=singles)
    rows = np.vstack([A, np.zeros((singles, n))])
    rows[m + np.arange(singles), single_cols] = single_coef
    senses = np.concatenate([senses, rng.choice([LE, GE, EQ], size=singles, p=[0.4, 0.4, 0.2])])

    slack = rng.uniform(0.0, 3.0, size=m + singles) * (rng.random(m + singles) < 0.7)
    activity = rows @ x0
    b = np.where(senses == LE, activity + slack, np.where(senses == GE, activity - slack, activity))
    triples = [(i, j, rows[i, j]) for i, j in zip(*np.nonzero(rows))]
    return StandardFormLP.from_triples(c, triples, list(senses), b, lb=lb, ub=ub)


def _reference(lp: StandardFormLP):
    dense = lp.A.toarray()
    le, ge, eq = lp.senses == LE, lp.senses == GE, lp.senses == EQ
    A_ub = np.vstack([dense[le], -dense[ge]])
    b_ub = np.concatenate([lp.b[le], -lp.b[ge]])
    return linprog(
        lp.c,
        A_ub=A_ub if A_ub.shape[0] else None, b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=dense[eq] if eq.any() else None, b_eq=lp.b[eq] if eq.any() else None,
        bounds=list(zip(lp.lb, lp.ub)), method="highs",
    )


@pytest.mark.parametrize("seed", range(100))
def test_mixed_random_lps_match_reference_solver(seed):
    lp = _mixed_lp(seed)
    reference = _reference(lp)
    assert reference.status == 0
    solution = solve_lp(lp)
    assert solution.status is LpStatus.OPTIMAL
    assert solution.objective == pytest.approx(reference.fun, rel=1e-7, abs=1e-6)
    assert lp.max_violation(solution.x) <= 1e-6
    assert solution.dual_objective == pytest.approx(solution.objective, rel=1e-7, abs=1e-5)
    assert np.all(solution.duals[lp.senses == LE] <= 1e-6)
    assert np.all(solution.duals[lp.senses == GE] >= -1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_random_lps_with_an_open_improving_column_are_unbounded(seed):
    lp = _mixed_lp(1000 + seed, open_column=True)
    solution = solve_lp(lp)
    assert solution.status is LpStatus.UNBOUNDED
    if solution.ray is not None:
        assert lp.c @ solution.ray < 0


@pytest.mark.parametrize("seed", range(10))
def test_random_lps_with_contradicting_rows_carry_a_certificate(seed):
    base = _mixed_lp(2000 + seed)
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.5, 2.0, size=base.n_cols)
    level = 5.0 * float(a.sum())
    conflict = sp.csr_matrix(np.vstack([a, a]))
    lp = base.with_rows(conflict, [LE, GE], [level, level + 1.0])
    solution = solve_lp(lp)
    assert solution.status is LpStatus.INFEASIBLE
    assert farkas_gap(lp, solution.farkas) > 1e-7


def test_single_column_rows_become_bounds_and_keep_their_duals():
    # min -2x - y  s.t. x + y <= 4, x <= 1, y <= 10
    lp = StandardFormLP.from_triples(
        [-2.0, -1.0], [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (2, 1, 1.0)], [LE, LE, LE], [4.0, 1.0, 10.0])
    folded = solve_lp(lp)
    plain = solve_lp(lp, presolve=False)
    assert folded.status is LpStatus.OPTIMAL
    assert folded.x == pytest.approx([1.0, 3.0])
    assert folded.objective == pytest.approx(-5.0)
    assert folded.duals == pytest.approx([-1.0, -1.0, 0.0])
    assert plain.duals == pytest.approx(folded.duals)
    assert folded.basis is None


def test_folded_equality_row_prices_through_its_coefficient():
    # min -2x - y  s.t. x + y <= 4, -2x = -2
    lp = StandardFormLP.from_triples(
        [-2.0, -1.0], [(0, 0, 1.0), (0, 1, 1.0), (1, 0, -2.0)], [LE, EQ], [4.0, -2.0])
    solution = solve_lp(lp)
    assert solution.status is LpStatus.OPTIMAL
    assert solution.x == pytest.approx([1.0, 3.0])
    assert solution.duals == pytest.approx([-1.0, 0.5])
    assert solution.dual_objective == pytest.approx(solution.objective)


def test_primal_switches_to_bland_on_degenerate_pivots(monkeypatch, caplog):
    monkeypatch.setattr(simplex, "DEGENERATE_STREAK", 1)
    caplog.set_level(logging.DEBUG, logger="solvers.simplex")
    # min -x - y  s.t. x + y <= 1, x - y <= 0: the first pivot is degenerate
    lp = StandardFormLP.from_triples(
        [-1.0, -1.0], [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)], [LE, LE], [1.0, 0.0])
    solution = solve_lp(lp, presolve=False)
    assert solution.status is LpStatus.OPTIMAL
    assert solution.objective == pytest.approx(-1.0)
    assert "Degenerate streak" in caplog.text


def test_dual_switches_to_bland_on_degenerate_pivots(monkeypatch, caplog):
    monkeypatch.setattr(simplex, "DEGENERATE_STREAK", 1)
    caplog.set_level(logging.DEBUG, logger="solvers.simplex")
    # a zero objective makes every dual step degenerate
    lp = StandardFormLP.from_triples(
        [0.0, 0.0], [(0, 0, 1.0), (0, 1, 1.0)], [EQ], [4.0], lb=[0.0, 0.0], ub=[10.0, 10.0])
    first = solve_lp(lp, presolve=False)
    warm = solve_lp(lp.with_rhs(np.array([12.0])), warm_start=first.basis)
    assert warm.status is LpStatus.OPTIMAL
    assert warm.x.sum() == pytest.approx(12.0)
    assert np.all(warm.x <= 10.0 + 1e-9)
    assert "Dual degenerate streak" in caplog.text
