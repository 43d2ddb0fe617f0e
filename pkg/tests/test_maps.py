import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repulsive_mot.cost import LogCost, RieszCost, pair_cost_matrix
from repulsive_mot.dual import DualPotential
from repulsive_mot.errors import ValidationError
from repulsive_mot.maps import (cyclic_map_1d, eno_derivative, plan_from_cyclic_map,
                                quantile_left_inverse, quantile_shift_map, recover_map_n2,
                                symmetric_plan_from_cyclic_map)
from repulsive_mot.measure import DiscreteMeasure
from repulsive_mot.primal import solve_mot


def test_quantile_left_inverse():
    mu = DiscreteMeasure([0.0, 1.0, 2.0, 3.0])
    assert quantile_left_inverse(mu, 0.0) == 0.0
    assert quantile_left_inverse(mu, 0.25) == 0.0
    assert quantile_left_inverse(mu, 0.26) == 1.0
    assert quantile_left_inverse(mu, 1.0) == 3.0
    with pytest.raises(ValidationError):
        quantile_left_inverse(mu, 1.5)


def test_four_atoms_half_shift():
    T = cyclic_map_1d(DiscreteMeasure([0.0, 0.25, 0.5, 0.75]), 2)
    assert [r[1] for r in T.rows()] == [0.5, 0.75, 0.0, 0.25]
    assert [r[2] for r in T.rows()] == [1, 1, 2, 2]
    assert T.is_cyclic() and T.exact
    assert T.to_csv().splitlines()[0] == "x,T(x),branch"


def test_continuous_uniform_map():
    T = quantile_shift_map(lambda x: x, lambda p: p, 3)
    assert T(0.1) == pytest.approx(0.1 + 1 / 3)
    assert T(0.9) == pytest.approx(0.9 + 1 / 3 - 1)
    assert T(T(T(0.2))) == pytest.approx(0.2)


def test_callable_matches_atom_images():
    mu = DiscreteMeasure(np.array([0.3, 0.1, 0.7, 0.4, 0.9, 0.2]))
    T = cyclic_map_1d(mu, 3)
    for i, x in enumerate(mu.points[:, 0]):
        assert T(x) == mu.points[T.image[i], 0]


@given(xs=st.lists(st.floats(-100, 100), min_size=2, max_size=8, unique=True),
       N=st.integers(2, 4), k=st.integers(1, 3))
def test_uniform_map_is_cyclic_and_pushes_forward(xs, N, k):
    m = N * k
    # pad with far-away atoms so every draw has exactly m distinct points
    pts = np.unique(np.concatenate([np.array(xs), np.arange(m) + 1000.0]))[:m]
    T = cyclic_map_1d(DiscreteMeasure(pts), N)
    assert T.exact
    assert T.is_cyclic()
    assert T.is_pushforward_exact()
    plan = plan_from_cyclic_map(T)
    plan.validate(np.full(m, 1 / m), 1e-12)


@pytest.mark.parametrize("N,m,f", [(2, 8, LogCost()), (3, 9, RieszCost(1.0)),
                                   (4, 8, RieszCost(2.0))])
def test_cyclic_plan_is_optimal(N, m, f):
    rng = np.random.default_rng(N * m)
    mu = DiscreteMeasure(np.sort(rng.uniform(0, 1, m)))
    plan = symmetric_plan_from_cyclic_map(cyclic_map_1d(mu, N))
    P = pair_cost_matrix(mu.points, f)
    assert plan.cost(P) == pytest.approx(solve_mot(mu, f, N).cost, abs=1e-9)


def test_non_uniform_weights_not_flagged_exact():
    mu = DiscreteMeasure([0.0, 1.0, 2.0, 3.0], [0.1, 0.2, 0.3, 0.4])
    assert not cyclic_map_1d(mu, 2).exact


def test_eno_avoids_kink():
    x = np.linspace(0, 1, 11)
    u = -2 * np.abs(x - 0.5)
    d = eno_derivative(u, 0.1)
    assert np.allclose(d[:5], 2.0) and np.allclose(d[6:], -2.0)


def test_recover_from_analytic_potential():
    m = 40
    x = (np.arange(m) + 0.5) / m
    rho = DiscreteMeasure(x)
    u = DualPotential(-2 * np.abs(x - 0.5) + (1 + np.log(2)) / 2)
    M = recover_map_n2(u, rho)
    expected = np.where(x < 0.5, x + 0.5, x - 0.5)
    assert np.abs(M.values[:, 0] - expected).max() <= 1e-12
    assert M.to_csv().splitlines()[0] == "x,T(x),defined"


def test_recover_needs_a_grid():
    with pytest.raises(ValidationError):
        recover_map_n2(np.zeros(3), DiscreteMeasure([0.0, 0.1, 0.5]))


def test_flat_potential_is_undefined():
    rho = DiscreteMeasure(np.linspace(0, 1, 5))
    M = recover_map_n2(np.zeros(5), rho)
    assert not M.defined.any()
