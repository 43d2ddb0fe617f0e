import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repulsive_mot.analysis import (alpha_bound, cost_upper_bound, cyclic_continuum_cost,
                                    density_quantile, gamma_sweep, grid_discretization,
                                    marginal_continuity_experiment, quantile_discretization,
                                    select_beta, tail_diagnostic, truncated_equality_check,
                                    verify_off_diagonal)
from repulsive_mot.corpus import make_instance
from repulsive_mot.cost import LogCost, RieszCost, WireCost
from repulsive_mot.errors import ValidationError
from repulsive_mot.measure import DiscreteMeasure
from repulsive_mot.primal import Coupling, solve_mot

THREE = DiscreteMeasure([0.0, 1.0, 2.0])


def test_alpha_bound_values():
    assert alpha_bound(LogCost(), 2, 0.1) == pytest.approx(0.01, rel=1e-12)
    assert alpha_bound(LogCost(), 3, 0.1) == pytest.approx(1e-9, rel=1e-12)
    assert alpha_bound(RieszCost(1.0), 2, 0.5) == pytest.approx(0.25)
    with pytest.raises(ValidationError):
        alpha_bound(LogCost(), 2, 0.0)


@pytest.mark.parametrize("f", [LogCost(), RieszCost(1.0), RieszCost(2.0), WireCost()],
                         ids=lambda f: f.family)
@given(beta=st.floats(1e-3, 0.9), N=st.integers(2, 4))
def test_alpha_bound_inverts(f, beta, N):
    a = alpha_bound(f, N, beta)
    target = N * N * (N - 1) / 2 * f(beta)
    assert f(a) == pytest.approx(target, rel=1e-9, abs=1e-9)


def test_select_beta_examples():
    assert select_beta(DiscreteMeasure(np.arange(10) / 10), 2) == 0.125
    assert select_beta(DiscreteMeasure(np.linspace(0, 1, 100)), 3) == 0.03125
    with pytest.raises(ValidationError):
        select_beta(DiscreteMeasure([0.0]), 2)
    with pytest.raises(ValidationError):
        select_beta(DiscreteMeasure(np.arange(12.0)), 3)


def test_cost_bound_values():
    assert cost_upper_bound(LogCost(), 2, 0.1).bound == pytest.approx(2 * math.log(10))
    assert cost_upper_bound(LogCost(), 3, 0.1).bound == pytest.approx(27 * math.log(10))
    check = cost_upper_bound(LogCost(), 2, 0.1, -0.231)
    assert check.passed and not check.vacuous
    assert cost_upper_bound(LogCost(), 2, 2.0).vacuous


def test_off_diagonal_examples():
    sol = solve_mot(THREE, LogCost(), 2)
    cert = verify_off_diagonal(sol.coupling, THREE, 0.09)
    assert cert.passed and cert.min_support_pair_distance == 1.0
    sol3 = solve_mot(THREE, LogCost(), 3)
    assert verify_off_diagonal(sol3.coupling, THREE, 1.0).passed
    diag = Coupling.from_entries(2, 3, [([0, 0], 1 / 3), ([1, 2], 1 / 3), ([2, 1], 1 / 3)])
    assert not verify_off_diagonal(diag, THREE, 1e-6).passed


@pytest.mark.parametrize("points", [[0.0, 1.0, 2.0], [0.0, 0.001, 1.0]])
def test_truncated_equality(points):
    rho = DiscreteMeasure(points)
    rep = truncated_equality_check(rho, LogCost(), 2, alpha=None)
    assert rep.passed
    assert rep.cost_difference <= 1e-9 and abs(rep.transfer_gap) <= 1e-9


def test_truncated_equality_rejects_large_alpha():
    with pytest.raises(ValidationError):
        truncated_equality_check(THREE, LogCost(), 2, alpha=10.0)


def test_sweep_three_points():
    res = gamma_sweep(THREE, LogCost(), 2, [0.5, 1.0, 2.0, 3.0])
    assert res.optima[1] == pytest.approx(0.0, abs=1e-12)
    assert res.optima[2] == res.optima[3] == pytest.approx(-math.log(2) / 3, abs=1e-12)
    assert res.monotone and res.stabilized
    lines = res.to_csv().splitlines()
    assert lines[0] == "R,optimum,gap,monotone,equals_exact" and len(lines) == 5


def test_sweep_parallel_is_ordered():
    inst = make_instance(9, 3, 6, "riesz1")
    grid = list(np.linspace(0.1, 1.5, 6))
    seq = gamma_sweep(inst.rho, inst.f, 3, grid)
    par = gamma_sweep(inst.rho, inst.f, 3, grid, workers=3)
    assert seq.optima == par.optima


def test_sweep_empty_grid_and_bad_grid():
    assert gamma_sweep(THREE, LogCost(), 2, []).to_csv().count("\n") == 1
    with pytest.raises(ValidationError):
        gamma_sweep(THREE, LogCost(), 2, [1.0, 0.5])


def test_continuity_constant_sequence():
    table = marginal_continuity_experiment(lambda m: THREE, [3, 6, 12], LogCost(), 2)
    assert table.differences == [0.0, 0.0]
    assert table.cauchy_decreasing


def test_continuum_oracles():
    assert cyclic_continuum_cost(LogCost(), 2) == pytest.approx(math.log(2), abs=1e-12)
    assert cyclic_continuum_cost(LogCost(), 3) == pytest.approx(3 * math.log(3) - math.log(2),
                                                                abs=1e-10)


def test_discretizations():
    q = density_quantile(lambda x: 2 * x, 0.0, 1.0)
    mu = quantile_discretization(q, 4)
    assert np.allclose(mu.points[:, 0], np.sqrt((np.arange(4) + 0.5) / 4), atol=1e-4)
    sq = grid_discretization(lambda x, y: np.ones_like(x), (0, 1, 0, 1), 3)
    assert sq.size == 9 and np.allclose(sq.weights, 1 / 9)


def test_tail_diagnostic_vanishes_for_large_radii():
    seq = [quantile_discretization(lambda p: p, m) for m in (4, 8, 16)]
    vals = tail_diagnostic(seq, LogCost(), [0.0], [0.25, 0.5, 2.0])
    assert vals[-1] == 0.0 and vals[0] > 0
