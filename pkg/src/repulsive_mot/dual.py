"""Kantorovich potentials: extraction from the LP, inf-representation, certificates.

A potential is one value u_i per atom; it is feasible when
sum_k u_{t_k} <= c(t) for every index tuple t, and its dual value is
N * sum_i w_i u_i.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .cost import CostModel, Truncation, pair_cost_matrix
from .errors import CertificateError, ValidationError
from .measure import DiscreteMeasure
from .primal import PrimalSolution

FEAS_TOL = 1e-9
CANON_TOL = 1e-12
CANON_MAX_ITER = 50


@dataclass(frozen=True)
class DualPotential:
    values: np.ndarray
    level: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValidationError("potential values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def dual_value(self, weights, N: int) -> float:
        return float(N * np.dot(weights, self.values))

    def to_list(self) -> list:
        return self.values.tolist()


@dataclass
class DualReport:
    dual_value: float
    gap: float | None = None
    lipschitz_empirical: float | None = None
    lipschitz_bound: float | None = None
    alpha: float | None = None
    iterations: int | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def cost_tensor(rho: DiscreteMeasure, f: CostModel, N: int,
                trunc: Truncation = Truncation()) -> np.ndarray:
    """Dense tensor C[i_1, ..., i_N] of tuple costs (+inf at the singularity)."""
    P = pair_cost_matrix(rho.points, f, trunc)
    m = rho.size
    C = np.zeros((m,) * N)
    for a, b in combinations(range(N), 2):
        shape = [1] * N
        shape[a], shape[b] = m, m
        C = C + P.reshape(shape)
    return C


def _potential_sum(u: np.ndarray, N: int) -> np.ndarray:
    m = u.size
    S = np.zeros((m,) * N)
    for axis in range(N):
        shape = [1] * N
        shape[axis] = m
        S = S + u.reshape(shape)
    return S


def max_violation(u, C: np.ndarray) -> float:
    """max over tuples of sum_k u_{t_k} - c(t); <= 0 means feasible."""
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    finite = np.isfinite(C)
    return float((_potential_sum(vals, C.ndim) - C)[finite].max())


def is_feasible(u, C: np.ndarray, tol: float = FEAS_TOL) -> bool:
    return max_violation(u, C) <= tol


def extract_dual(sol: PrimalSolution) -> DualPotential:
    """Average the per-axis LP multipliers into one shared potential.

    For a permutation-symmetric cost, averaging the N multiplier vectors keeps
    every constraint (it averages the constraints of all permuted tuples) and
    leaves the dual objective unchanged.
    """
    u = sol.dual_multipliers.mean(axis=0)
    level = sol.trunc.value if sol.trunc.kind == "above" else None
    return DualPotential(u, level)


def inf_representation(u, C: np.ndarray) -> np.ndarray:
    """(Tu)_i = min over (i_2..i_N) of c(i, i_2, ..., i_N) - sum_{j>=2} u_{i_j}."""
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    N = C.ndim
    m = vals.size
    if m == 0:
        raise ValidationError("empty potential")
    T = C.copy()
    for axis in range(1, N):
        shape = [1] * N
        shape[axis] = m
        T = T - vals.reshape(shape)
    return T.reshape(m, -1).min(axis=1)


def c_transform(u: DualPotential, f: CostModel, rho: DiscreteMeasure, N: int,
                level: float | None = None, *, C: np.ndarray | None = None) -> DualPotential:
    """One sweep of the inf-representation, applied atom by atom.

    Atoms are visited in order and each value is replaced, using the values
    already updated in this sweep, by

        u_i <- min over tuples t containing i of (c(t) - sum of u over the
               other entries of t) / (number of times i occurs in t),

    which for tuples of distinct atoms is min over (i_2..i_N) of
    c(i, i_2, ..., i_N) - sum_{j>=2} u_{i_j}.  Each replacement keeps every
    constraint satisfied and cannot lower u_i, so a feasible input gives a
    feasible output that dominates it.  After the sweep every atom sits on a
    tight tuple, hence a second sweep changes nothing.  ``level=None`` uses
    the untruncated cost, otherwise min{level, f}.
    """
    if C is None:
        trunc = Truncation() if level is None else Truncation.above(level)
        C = cost_tensor(rho, f, N, trunc)
    vals = np.array(u.values, dtype=float)
    m = vals.size
    if m == 0:
        raise ValidationError("empty potential")
    slack = C - _potential_sum(vals, N)
    idx = np.arange(m)
    for i in range(m):
        # multiplicity of atom i in the tuples (i, i_2, ..., i_N)
        mult = np.ones((m,) * (N - 1))
        for axis in range(N - 1):
            shape = [1] * (N - 1)
            shape[axis] = m
            mult = mult + (idx == i).reshape(shape)
        delta = float(np.min(slack[i] / mult))
        if not np.isfinite(delta):
            raise ValidationError(f"atom {i} belongs to no finite-cost tuple")
        vals[i] += delta
        for axis in range(N):
            sl = [slice(None)] * N
            sl[axis] = i
            slack[tuple(sl)] -= delta
    return DualPotential(vals, level)


def canonicalize(u: DualPotential, f: CostModel, rho: DiscreteMeasure, N: int,
                 level: float | None = None, *, tol: float = CANON_TOL,
                 max_iter: int = CANON_MAX_ITER) -> tuple[DualPotential, list[float]]:
    """Iterate :func:`c_transform` until the sup-norm change drops below ``tol``.

    Returns the final potential and the history of sup-norm changes; the
    history normally has two entries (the improving sweep, then a zero).
    """
    trunc = Truncation() if level is None else Truncation.above(level)
    C = cost_tensor(rho, f, N, trunc)
    if not is_feasible(u, C):
        raise ValidationError(
            f"potential violates the constraints by {max_violation(u, C):.3e}")
    history = []
    for _ in range(max_iter):
        new = c_transform(u, f, rho, N, level, C=C)
        change = float(np.abs(new.values - u.values).max())
        history.append(change)
        u = new
        if change < tol:
            break
    return u, history


def empirical_lipschitz(u, rho: DiscreteMeasure) -> float:
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    if vals.size < 2:
        return 0.0
    d = rho.distances()
    iu = np.triu_indices(vals.size, 1)
    return float((np.abs(vals[:, None] - vals[None, :])[iu] / d[iu]).max())


def lipschitz_bound(f: CostModel, N: int, alpha: float) -> float:
    """(N - 1) * sup_{t >= alpha} |f'(t)|."""
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    return (N - 1) * f.max_slope(alpha)


def lipschitz_report(u: DualPotential, rho: DiscreteMeasure, f: CostModel, N: int,
                     alpha: float, tol: float = 1e-6) -> DualReport:
    """Empirical vs. theoretical Lipschitz constant of a canonical potential.

    Raises :class:`~repulsive_mot.errors.CertificateError` when the empirical
    constant exceeds the bound by more than ``tol``.
    """
    bound = lipschitz_bound(f, N, alpha)
    emp = empirical_lipschitz(u, rho)
    if emp > bound + tol:
        raise CertificateError(f"empirical Lipschitz constant {emp} exceeds bound {bound}")
    return DualReport(dual_value=u.dual_value(rho.weights, N), lipschitz_empirical=emp,
                      lipschitz_bound=bound, alpha=alpha)


def duality_gap(primal_cost: float, dual_value: float) -> float:
    return primal_cost - dual_value


def certified_gap(u: DualPotential, primal_cost: float, rho: DiscreteMeasure, f: CostModel,
                  N: int, trunc: Truncation = Truncation(), tol: float = FEAS_TOL) -> float:
    """Gap after checking that ``u`` is feasible for the given cost variant.

    An infeasible potential is rejected: its "dual value" bounds nothing.
    """
    C = cost_tensor(rho, f, N, trunc)
    viol = max_violation(u, C)
    if viol > tol:
        raise ValidationError(f"potential is infeasible (violation {viol:.3e})")
    return duality_gap(primal_cost, u.dual_value(rho.weights, N))
