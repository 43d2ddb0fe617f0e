"""The discrete multi-marginal problem  min_{gamma in Gamma(rho)} sum gamma(t) c(t).

Variables are the index tuples t in {0..m-1}^N whose cost is finite; tuples
touching the singularity are removed from the LP rather than penalized.  The
constraints fix every one-dimensional marginal to the weights of rho.  Summing
the constraints of any axis gives total mass one, so for each axis k >= 1 the
constraint of its last atom is implied and dropped (N - 1 rows).
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, permutations

import numpy as np
import scipy.sparse as sp

from .cost import CostModel, Truncation, pair_cost_matrix, tuple_costs
from .errors import BudgetExceededError, InfeasibleError, ValidationError
from .measure import DiscreteMeasure
from .simplex import LPResult, solve_lp

DEFAULT_BUDGET = 5_000_000
ORACLE_MAX_TENSOR = 64
ORACLE_MAX_BASES = 5_000_000
SUPPORT_THRESHOLD = 1e-10
MARGINAL_TOL = 1e-9


def default_budget() -> int:
    return int(os.environ.get("REPULSIVE_MOT_BUDGET", DEFAULT_BUDGET))


@dataclass(frozen=True)
class Coupling:
    """Sparse N-way coupling: rows of ``tuples`` (k, N) carry ``masses`` (k,)."""

    N: int
    m: int
    tuples: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tuples, dtype=np.int64).reshape(-1, self.N)
        w = np.asarray(self.masses, dtype=float).reshape(-1)
        if t.shape[0] != w.shape[0]:
            raise ValidationError("tuples and masses differ in length")
        if t.size and (t.min() < 0 or t.max() >= self.m):
            raise ValidationError("tuple index out of range")
        keep = w > 0
        t, w = t[keep], w[keep]
        t.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "tuples", t)
        object.__setattr__(self, "masses", w)

    @classmethod
    def from_entries(cls, N: int, m: int, entries) -> "Coupling":
        """Aggregate ``(tuple, mass)`` pairs, summing repeated tuples."""
        acc: dict[tuple, float] = {}
        for tup, mass in entries:
            key = tuple(int(i) for i in tup)
            acc[key] = acc.get(key, 0.0) + float(mass)
        keys = sorted(acc)
        return cls(N, m, np.array(keys, dtype=np.int64).reshape(-1, N),
                   np.array([acc[k] for k in keys]))

    def marginal(self, axis: int) -> np.ndarray:
        return np.bincount(self.tuples[:, axis], weights=self.masses, minlength=self.m)

    def marginals(self) -> np.ndarray:
        return np.stack([self.marginal(k) for k in range(self.N)])

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def marginal_error(self, weights) -> float:
        return float(np.abs(self.marginals() - np.asarray(weights)[None, :]).max())

    def validate(self, weights, tol: float = MARGINAL_TOL) -> None:
        if np.any(self.masses <= 0):
            raise ValidationError("coupling masses must be positive")
        if abs(self.total_mass - 1.0) > tol:
            raise ValidationError(f"coupling has total mass {self.total_mass!r}")
        err = self.marginal_error(weights)
        if err > tol:
            raise ValidationError(f"coupling marginals deviate from rho by {err:.3e}")

    def cost(self, P: np.ndarray) -> float:
        """Total cost against a pair-cost matrix (use :func:`pair_cost_matrix`)."""
        if self.masses.size == 0:
            return 0.0
        return float(self.masses @ tuple_costs(P, self.tuples))

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        lookup = {tuple(t): w for t, w in zip(self.tuples.tolist(), self.masses)}
        for t, w in lookup.items():
            for perm in set(permutations(t)):
                if abs(lookup.get(perm, 0.0) - w) > tol:
                    return False
        return True

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "m": self.m,
            "entries": [{"tuple": t, "mass": w}
                        for t, w in zip(self.tuples.tolist(), self.masses.tolist())],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Coupling":
        try:
            N, m = int(data["N"]), int(data["m"])
            entries = [(e["tuple"], e["mass"]) for e in data["entries"]]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed coupling document: {exc}") from None
        if any(len(t) != N for t, _ in entries):
            raise ValidationError("coupling tuple length differs from N")
        return cls.from_entries(N, m, entries)


@dataclass
class PrimalSolution:
    coupling: Coupling
    cost: float
    iterations: int
    lp: LPResult = field(repr=False)
    tuples: np.ndarray = field(repr=False)
    dual_multipliers: np.ndarray = field(repr=False)
    measure: DiscreteMeasure = field(repr=False)
    f: CostModel
    trunc: Truncation
    n_variables: int
    n_excluded: int
    seconds: float

    @property
    def N(self) -> int:
        return self.coupling.N

    @property
    def gap(self) -> float:
        return self.cost - self.lp.dual_objective

    def diagnostics(self) -> dict:
        return {
            "iterations": self.iterations,
            "phase1_iterations": self.lp.phase1_iterations,
            "bland_pivots": self.lp.bland_pivots,
            "n_variables": self.n_variables,
            "n_excluded_infinite": self.n_excluded,
            "basis_size": int(self.lp.basis.size),
            "basic_structural": int((self.lp.basis < self.n_variables).sum()),
            "min_reduced_cost": self.lp.min_reduced_cost,
            "max_primal_infeasibility": self.lp.max_primal_infeasibility,
            "seconds": self.seconds,
        }


def enumerate_tuples(m: int, N: int) -> np.ndarray:
    """All index tuples of {0..m-1}^N in lexicographic order, shape (m^N, N)."""
    idx = np.indices((m,) * N, dtype=np.int64).reshape(N, -1)
    return idx.T.copy()


def constraint_rows(m: int, N: int) -> np.ndarray:
    """Map (axis, atom) -> LP row, with -1 for the dropped redundant rows."""
    rows = -np.ones((N, m), dtype=np.int64)
    k = 0
    for axis in range(N):
        for i in range(m):
            if axis >= 1 and i == m - 1:
                continue
            rows[axis, i] = k
            k += 1
    return rows


def build_lp(rho: DiscreteMeasure, f: CostModel, N: int, trunc: Truncation = Truncation(),
             budget: int | None = None):
    """Assemble (A, b, c, tuples, row_map, n_excluded) for the coupling LP."""
    if N < 2:
        raise ValidationError("N must be at least 2")
    m = rho.size
    budget = default_budget() if budget is None else budget
    if m ** N > budget:
        raise BudgetExceededError(f"m^N = {m ** N} exceeds the variable budget {budget}")
    P = pair_cost_matrix(rho.points, f, trunc)
    tuples = enumerate_tuples(m, N)
    costs = tuple_costs(P, tuples)
    finite = np.isfinite(costs)
    if not finite.any():
        raise InfeasibleError(
            f"every tuple has infinite cost (m={m}, N={N}): no N pairwise distinct atoms")
    tuples, costs = tuples[finite], costs[finite]
    row_map = constraint_rows(m, N)
    rows = row_map[np.arange(N)[None, :], tuples]
    n = tuples.shape[0]
    keep = rows >= 0
    cols = np.broadcast_to(np.arange(n)[:, None], rows.shape)
    n_rows = int(row_map.max()) + 1
    A = sp.csc_matrix((np.ones(int(keep.sum())), (rows[keep], cols[keep])), shape=(n_rows, n))
    b = np.empty(n_rows)
    for axis in range(N):
        sel = row_map[axis] >= 0
        b[row_map[axis, sel]] = rho.weights[sel]
    return A, b, costs, tuples, row_map, int((~finite).sum())


def solve_mot(rho: DiscreteMeasure, f: CostModel, N: int, trunc: Truncation = Truncation(),
              *, budget: int | None = None, rule: str = "dantzig", tol: float = 1e-9) -> PrimalSolution:
    """Optimal coupling of the discrete problem by revised simplex."""
    t0 = time.perf_counter()
    A, b, c, tuples, row_map, n_excl = build_lp(rho, f, N, trunc, budget)
    lp = solve_lp(A, b, c, rule=rule, tol=tol)
    y = np.where(row_map >= 0, lp.y[np.maximum(row_map, 0)], 0.0)
    support = lp.x > 0
    coupling = Coupling(N, rho.size, tuples[support], lp.x[support])
    return PrimalSolution(
        coupling=coupling, cost=lp.objective, iterations=lp.iterations, lp=lp,
        tuples=tuples, dual_multipliers=y, measure=rho, f=f, trunc=trunc,
        n_variables=tuples.shape[0], n_excluded=n_excl, seconds=time.perf_counter() - t0,
    )


def symmetrize(gamma: Coupling) -> Coupling:
    """Average of gamma over all N! coordinate permutations."""
    perms = list(permutations(range(gamma.N)))
    scale = 1.0 / len(perms)
    entries = []
    for p in perms:
        for t, w in zip(gamma.tuples[:, p].tolist(), gamma.masses):
            entries.append((t, w * scale))
    return Coupling.from_entries(gamma.N, gamma.m, entries)


def coupling_support(gamma: Coupling, rho: DiscreteMeasure,
                     threshold: float = SUPPORT_THRESHOLD) -> list[tuple[np.ndarray, float]]:
    """Support entries as (points array of shape (N, d), mass), mass above threshold."""
    keep = gamma.masses > threshold
    return [(rho.points[t], float(w)) for t, w in zip(gamma.tuples[keep], gamma.masses[keep])]


# --- independent oracle -----------------------------------------------------

def _enumerate_bfs_min(A: np.ndarray, b: np.ndarray, c: np.ndarray,
                       max_bases: int, chunk: int = 100_000) -> float:
    """Minimum of c^T x over the basic feasible solutions of {A x = b, x >= 0}.

    Every basis is a set of rank(A) columns; each one is tried, its square
    system solved on a maximal independent row subset, and kept when the
    solution satisfies every row and is non-negative.
    """
    rank = np.linalg.matrix_rank(A)
    n = A.shape[1]
    count = math.comb(n, rank)
    if count > max_bases:
        raise BudgetExceededError(f"{count} candidate bases exceed the oracle budget {max_bases}")
    # rows spanning the row space (greedy)
    rows: list[int] = []
    for i in range(A.shape[0]):
        if np.linalg.matrix_rank(A[rows + [i]]) > len(rows):
            rows.append(i)
    Ar, br = A[rows], b[rows]
    best = math.inf
    combos = combinations(range(n), rank)
    while True:
        block = np.array([s for _, s in zip(range(chunk), combos)], dtype=np.int64)
        if block.size == 0:
            break
        mats = Ar[:, block].transpose(1, 0, 2)  # (k, rank, rank)
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > 1e-9
        if not ok.any():
            continue
        sel, mats = block[ok], mats[ok]
        xs = np.linalg.solve(mats, np.broadcast_to(br, (mats.shape[0], rank))[..., None])[..., 0]
        nonneg = np.all(xs >= -1e-12, axis=1)
        for S, xS in zip(sel[nonneg], xs[nonneg]):
            if np.abs(A[:, S] @ xS - b).max() > 1e-9:
                continue
            val = float(c[S] @ xS)
            best = min(best, val)
    if not math.isfinite(best):
        raise InfeasibleError("no basic feasible solution found")
    return best


def brute_force_oracle(rho: DiscreteMeasure, f: CostModel, N: int, trunc: Truncation = Truncation(),
                       *, symmetric: bool = True, max_bases: int = ORACLE_MAX_BASES) -> float:
    """Optimal value by exhaustive enumeration of basic feasible solutions.

    With ``symmetric=True`` the enumeration runs over symmetric couplings,
    parametrized by the total mass z_S of each multiset S of N atoms; the
    marginal condition reads sum_S z_S mult_i(S)/N = w_i.  Restricting to
    symmetric plans does not change the optimal value for a symmetric cost
    and shrinks the vertex enumeration enough to cover every instance with
    m^N <= 64.  ``symmetric=False`` enumerates the full tensor LP (tiny
    instances only).  No code is shared with the simplex path.
    """
    m = rho.size
    if m ** N > ORACLE_MAX_TENSOR:
        raise BudgetExceededError(f"m^N = {m ** N} exceeds the oracle limit {ORACLE_MAX_TENSOR}")
    P = pair_cost_matrix(rho.points, f, trunc)
    if symmetric:
        sets = [S for S in combinations_with_replacement(range(m), N)]
        costs = np.array([sum(P[a, b] for a, b in combinations(S, 2)) for S in sets])
        A = np.array([[S.count(i) / N for S in sets] for i in range(m)])
        b = np.asarray(rho.weights, dtype=float)
    else:
        sets = list(np.ndindex(*(m,) * N))
        costs = np.array([sum(P[a, b] for a, b in combinations(S, 2)) for S in sets])
        A = np.zeros((N * m, len(sets)))
        for j, S in enumerate(sets):
            for axis, i in enumerate(S):
                A[axis * m + i, j] = 1.0
        b = np.tile(np.asarray(rho.weights, dtype=float), N)
    finite = np.isfinite(costs)
    if not finite.any():
        raise InfeasibleError("every tuple has infinite cost")
    return _enumerate_bfs_min(A[:, finite], b, costs[finite], max_bases)
