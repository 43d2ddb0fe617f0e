import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from repulsive_mot.errors import InfeasibleError, SolverError
from repulsive_mot.simplex import solve_lp


def _random_lp(seed, r, n, degenerate):
    rng = np.random.default_rng(seed)
    A = rng.integers(-2, 3, size=(r, n)).astype(float)
    x0 = rng.uniform(0, 1, size=n)
    if degenerate:
        x0[rng.uniform(size=n) < 0.6] = 0.0
    b = A @ x0
    c = rng.integers(0, 5, size=n).astype(float)  # bounded below on the feasible set
    return A, b, c


@pytest.mark.parametrize("rule", ["dantzig", "bland"])
@given(seed=st.integers(0, 10_000), r=st.integers(1, 6), extra=st.integers(1, 8),
       degenerate=st.booleans())
def test_matches_highs(rule, seed, r, extra, degenerate):
    A, b, c = _random_lp(seed, r, r + extra, degenerate)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    res = solve_lp(A, b, c, rule=rule)
    assert ref.status == 0
    assert res.objective == pytest.approx(ref.fun, abs=1e-7)
    assert np.abs(A @ res.x - b).max() <= 1e-8
    assert res.x.min() >= 0
    # the final basis is dual feasible and closes the gap
    assert res.min_reduced_cost >= -1e-9
    assert res.dual_objective == pytest.approx(res.objective, abs=1e-7)


def test_infeasible_detected():
    A = np.array([[1.0, 1.0]])
    with pytest.raises(InfeasibleError):
        solve_lp(A, np.array([-1.0]), np.array([1.0, 1.0]))


def test_unbounded_detected():
    A = np.array([[1.0, -1.0]])
    with pytest.raises(SolverError):
        solve_lp(A, np.array([0.0]), np.array([-1.0, 0.0]))


def test_negative_rhs_flips_rows_and_duals():
    A = np.array([[-1.0, -1.0]])
    res = solve_lp(A, np.array([-2.0]), np.array([1.0, 3.0]))
    assert res.objective == pytest.approx(2.0)
    # y satisfies the original (unflipped) dual: A^T y <= c with equality on x_1
    assert res.y[0] == pytest.approx(-1.0)


def test_redundant_rows_handled():
    A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0, 2.0, 1.0])
    res = solve_lp(A, b, np.array([1.0, 2.0, 0.5]))
    ref = linprog([1.0, 2.0, 0.5], A_eq=A, b_eq=b, method="highs")
    assert res.objective == pytest.approx(ref.fun)


def test_transportation_problem_with_heavy_degeneracy():
    # assignment-type LP: every basic solution is highly degenerate
    n = 6
    rng = np.random.default_rng(3)
    C = rng.integers(0, 4, size=(n, n)).astype(float)
    A = np.zeros((2 * n, n * n))
    for i in range(n):
        A[i, i * n:(i + 1) * n] = 1
        A[n + i, i::n] = 1
    b = np.ones(2 * n)
    for rule in ("dantzig", "bland"):
        res = solve_lp(A, b, C.ravel(), rule=rule)
        ref = linprog(C.ravel(), A_eq=A, b_eq=b, method="highs")
        assert res.objective == pytest.approx(ref.fun)
