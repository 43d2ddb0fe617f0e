import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repulsive_mot.cost import (LogCost, RieszCost, TabulatedCost, Truncation, WireCost,
                                cost_from_dict, f_left_inverse, f_truncate_above,
                                f_truncate_below, pair_cost_matrix, tuple_cost, tuple_costs)
from repulsive_mot.errors import ValidationError

FAMILIES = [LogCost(), RieszCost(1.0), RieszCost(2.0), WireCost(),
            WireCost(eps0=0.3, s0=2.0),
            TabulatedCost((0.1, 0.5, 1.0, 2.0), (3.0, 1.0, 0.2, -0.5))]


def test_spot_values():
    assert LogCost()(1.0) == 0.0
    assert LogCost()(0.5) == pytest.approx(math.log(2))
    assert RieszCost(1.0)(0.5) == 2.0
    assert RieszCost(2.0)(0.5) == 4.0
    assert WireCost()(math.e) == pytest.approx(-1.0)
    assert LogCost()(0.0) == math.inf
    assert f_left_inverse(LogCost(), math.log(10)) == pytest.approx(0.1, rel=1e-15)
    assert f_left_inverse(RieszCost(1.0), 4.0) == 0.25


def test_wire_strength():
    f = WireCost(eps0=1.0, s0=2.0)
    assert f.strength == pytest.approx(1 / (2 * math.pi))
    assert f(2.0) == 0.0


def test_negative_distance_rejected():
    with pytest.raises(ValidationError):
        LogCost()(-1e-3)


def test_left_inverse_out_of_range():
    with pytest.raises(ValidationError):
        f_left_inverse(RieszCost(1.0), 0.0)
    with pytest.raises(ValidationError):
        f_left_inverse(RieszCost(1.0), -1.0)
    assert f_left_inverse(LogCost(), math.inf) == 0.0


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.family)
@given(t=st.floats(1e-3, 50))
def test_left_inverse_round_trip(f, t):
    y = f(t)
    s = f_left_inverse(f, y)
    assert f(s) == pytest.approx(y, rel=1e-9, abs=1e-9)
    if f.strictly_decreasing or t < f.t[-1]:
        assert s == pytest.approx(t, rel=1e-7)


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.family)
def test_non_increasing(f):
    t = np.geomspace(1e-4, 1e3, 2000)
    assert np.all(np.diff(f(t)) <= 1e-12)


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.family)
@pytest.mark.parametrize("alpha", [0.05, 0.3, 1.5])
def test_max_slope_bounds_finite_differences(f, alpha):
    t = np.linspace(alpha, 20, 20001)
    fd = np.abs(np.diff(f(t)) / np.diff(t)).max()
    assert fd <= f.max_slope(alpha) * (1 + 1e-6) + 1e-9


def test_tabulated_extension():
    f = TabulatedCost((1.0, 2.0), (1.0, 0.0))
    assert f(1.5) == 0.5
    assert f(10.0) == 0.0
    # log continuation with matching slope k = t0 * |slope| = 1
    assert f(0.5) == pytest.approx(1 + math.log(2))
    assert f(0.0) == math.inf
    with pytest.raises(ValidationError):
        TabulatedCost((1.0, 2.0), (1.0, 1.0))


def test_truncations():
    f = LogCost()
    assert f_truncate_below(f, 2.0, 3.0) == f(2.0)
    assert f_truncate_below(f, 2.0, 1.0) == 0.0
    assert f_truncate_above(f, 1.0, 0.0) == 1.0
    assert f_truncate_above(f, 1.0, 0.5) == pytest.approx(math.log(2))
    with pytest.raises(ValidationError):
        Truncation.below(0.0)
    with pytest.raises(ValidationError):
        Truncation.above(math.inf)
    for tr in (Truncation(), Truncation.below(1.5), Truncation.above(3.0)):
        assert Truncation.from_dict(tr.to_dict()) == tr


@given(R=st.floats(0.01, 10), level=st.floats(-5, 20), t=st.floats(0, 30))
def test_truncation_order(R, level, t):
    f = LogCost()
    assert f_truncate_below(f, R, t) >= f(t) or math.isinf(f(t))
    assert f_truncate_above(f, level, t) <= f(t)


def test_tuple_cost():
    f = LogCost()
    assert tuple_cost(f, [0.0, 1.0, 2.0]) == pytest.approx(-math.log(2))
    assert tuple_cost(f, [[0, 0], [0, 0]]) == math.inf
    with pytest.raises(ValidationError):
        tuple_cost(f, [0.0])
    with pytest.raises(ValidationError):
        tuple_cost(f, [[0.0], [1.0, 2.0]])


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=6, unique=True),
       st.permutations(range(3)))
def test_tuple_cost_symmetric_and_matches_vectorized(xs, perm):
    pts = np.array(xs)[:, None]
    f = RieszCost(1.0)
    base = tuple_cost(f, pts[:3])
    assert tuple_cost(f, pts[list(perm)]) == pytest.approx(base, rel=1e-12)
    P = pair_cost_matrix(pts, f)
    vec = tuple_costs(P, np.array([[0, 1, 2]]))[0]
    assert vec == pytest.approx(base, rel=1e-12)


def test_cost_from_dict():
    for f in FAMILIES:
        assert cost_from_dict(f.to_dict()) == f
    with pytest.raises(ValidationError):
        cost_from_dict({"family": "gauss"})
    with pytest.raises(ValidationError):
        cost_from_dict({"s": 1})
