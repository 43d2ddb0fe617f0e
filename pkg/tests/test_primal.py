import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repulsive_mot.corpus import make_instance
from repulsive_mot.cost import LogCost, RieszCost, Truncation, pair_cost_matrix
from repulsive_mot.errors import BudgetExceededError, InfeasibleError, ValidationError
from repulsive_mot.measure import DiscreteMeasure
from repulsive_mot.primal import (Coupling, brute_force_oracle, build_lp, constraint_rows,
                                  enumerate_tuples, solve_mot, symmetrize)

THREE = DiscreteMeasure([0.0, 1.0, 2.0])


def test_two_points_zero_cost():
    sol = solve_mot(DiscreteMeasure([0.0, 1.0]), LogCost(), 2)
    assert sol.cost == 0.0
    assert sol.coupling.marginal_error(sol.measure.weights) <= 1e-12


def test_three_points_pair_value():
    sol = solve_mot(THREE, LogCost(), 2)
    assert sol.cost == pytest.approx(-math.log(2) / 3, abs=1e-12)
    assert abs(sol.gap) <= 1e-12


def test_three_points_triple_value():
    sol = solve_mot(THREE, LogCost(), 3)
    assert sol.cost == pytest.approx(-math.log(2), abs=1e-12)


def test_too_few_atoms_is_infeasible():
    with pytest.raises(InfeasibleError):
        solve_mot(DiscreteMeasure([0.0, 1.0]), LogCost(), 3)


def test_heavy_atom_is_infeasible():
    # an atom heavier than 1/N cannot avoid sharing a tuple with itself
    rho = DiscreteMeasure([0.0, 1.0, 2.0], [0.5, 0.25, 0.25])
    with pytest.raises(InfeasibleError):
        solve_mot(rho, LogCost(), 3)


def test_budget():
    rho = DiscreteMeasure(np.arange(10.0))
    with pytest.raises(BudgetExceededError):
        solve_mot(rho, LogCost(), 3, budget=999)


def test_lp_shape():
    A, b, c, tuples, rows, excluded = build_lp(THREE, LogCost(), 3)
    assert excluded == 27 - 6
    assert A.shape == (3 * 3 - 2, 6)
    assert rows[1, 2] == -1 and rows[2, 2] == -1 and rows[0, 2] >= 0
    assert enumerate_tuples(2, 2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert (constraint_rows(4, 3) >= 0).sum() == 3 * 4 - 2


def test_coupling_round_trip_and_validation():
    gamma = Coupling.from_entries(2, 2, [([0, 1], 0.5), ([1, 0], 0.5), ([0, 0], 0.0)])
    assert gamma.tuples.shape == (2, 2)
    again = Coupling.from_dict(gamma.to_dict())
    assert np.array_equal(again.tuples, gamma.tuples)
    gamma.validate([0.5, 0.5])
    with pytest.raises(ValidationError):
        gamma.validate([0.4, 0.6])
    with pytest.raises(ValidationError):
        Coupling.from_entries(2, 2, [([0, 2], 1.0)])
    with pytest.raises(ValidationError):
        Coupling.from_dict({"N": 2, "m": 2, "entries": [{"tuple": [0, 1, 1], "mass": 1.0}]})


def test_symmetrize_keeps_cost_and_marginals():
    sol = solve_mot(DiscreteMeasure([0.0, 0.4, 1.1, 2.0]), RieszCost(1.0), 3)
    sym = symmetrize(sol.coupling)
    P = pair_cost_matrix(sol.measure.points, RieszCost(1.0))
    assert sym.is_symmetric()
    assert sym.cost(P) == pytest.approx(sol.cost, abs=1e-12)
    assert sym.marginal_error(sol.measure.weights) <= 1e-12


@pytest.mark.parametrize("N,m", [(2, 3), (2, 4), (2, 5), (3, 3)])
def test_oracle_full_and_symmetric_agree(N, m):
    inst = make_instance(100 + m + N, N, m, "riesz1")
    full = brute_force_oracle(inst.rho, inst.f, N, symmetric=False)
    sym = brute_force_oracle(inst.rho, inst.f, N)
    assert full == pytest.approx(sym, abs=1e-10)


@given(seed=st.integers(0, 10_000), m=st.integers(3, 7))
def test_solver_matches_oracle_pairs(seed, m):
    inst = make_instance(seed, 2, m, "log")
    sol = solve_mot(inst.rho, inst.f, 2)
    assert sol.cost == pytest.approx(brute_force_oracle(inst.rho, inst.f, 2), abs=1e-9)


@given(seed=st.integers(0, 10_000), m=st.integers(3, 7), N=st.integers(2, 3))
def test_solution_is_a_coupling(seed, m, N):
    inst = make_instance(seed, N, m, "riesz2", dim=2)
    sol = solve_mot(inst.rho, inst.f, N)
    sol.coupling.validate(inst.rho.weights, 1e-9)
    assert sol.coupling.masses.min() > 0
    P = pair_cost_matrix(inst.rho.points, inst.f)
    assert sol.coupling.cost(P) == pytest.approx(sol.cost, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("rule", ["dantzig", "bland"])
def test_pivot_rules_agree(rule):
    inst = make_instance(7, 3, 7, "wire")
    ref = solve_mot(inst.rho, inst.f, 3)
    assert solve_mot(inst.rho, inst.f, 3, rule=rule).cost == pytest.approx(ref.cost, abs=1e-10)


def test_truncated_problems_order():
    inst = make_instance(11, 2, 8, "log")
    exact = solve_mot(inst.rho, inst.f, 2).cost
    capped = solve_mot(inst.rho, inst.f, 2, Truncation.above(0.5)).cost
    flat = solve_mot(inst.rho, inst.f, 2, Truncation.below(0.3)).cost
    assert capped <= exact + 1e-12 <= flat + 2e-12
