"""Two-phase revised simplex for  min c^T x  s.t.  A x = b, x >= 0.

The basis inverse is kept dense and updated in product form, with a fresh
factorization every ``refactor_every`` pivots and before the final
certificate.  Pricing is Dantzig's most-negative reduced cost; after
``stall_limit`` consecutive degenerate pivots the solver switches to Bland's
smallest-index rule until the objective moves again, which rules out cycling.
``rule="bland"`` uses Bland's rule throughout.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InfeasibleError, SolverError

logger = logging.getLogger(__name__)


@dataclass
class LPResult:
    x: np.ndarray
    y: np.ndarray
    objective: float
    dual_objective: float
    basis: np.ndarray
    iterations: int
    phase1_iterations: int
    bland_pivots: int
    max_primal_infeasibility: float
    min_reduced_cost: float


class RevisedSimplex:
    def __init__(self, A, b, c, *, tol: float = 1e-9, pivot_tol: float = 1e-9,
                 rule: str = "dantzig", stall_limit: int = 50,
                 refactor_every: int = 64, max_iter: int | None = None):
        A = sp.csc_matrix(A, dtype=float)
        b = np.asarray(b, dtype=float).copy()
        c = np.asarray(c, dtype=float)
        if rule not in ("dantzig", "bland"):
            raise ValueError(f"unknown pivot rule {rule!r}")
        neg = b < 0
        self.row_sign = np.where(neg, -1.0, 1.0)
        if neg.any():
            flip = sp.diags(np.where(neg, -1.0, 1.0))
            A = sp.csc_matrix(flip @ A)
            b[neg] = -b[neg]
        self.r, self.n = A.shape
        self.A = A
        self.b = b
        self.c = c
        self.tol = tol
        self.pivot_tol = pivot_tol
        self.rule = rule
        self.stall_limit = stall_limit
        self.refactor_every = refactor_every
        self.max_iter = max_iter or 50 * (self.r + self.n) + 1000
        self.iterations = 0
        self.bland_pivots = 0

    # columns j < n are structural, j >= n is the artificial for row j - n
    def _column(self, j: int) -> np.ndarray:
        if j >= self.n:
            e = np.zeros(self.r)
            e[j - self.n] = 1.0
            return e
        col = np.zeros(self.r)
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        col[self.A.indices[lo:hi]] = self.A.data[lo:hi]
        return col

    def _basis_matrix(self) -> np.ndarray:
        return np.column_stack([self._column(j) for j in self.basis])

    def _refactor(self):
        B = self._basis_matrix()
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular basis encountered") from exc
        self.xB = self.Binv @ self.b
        self.since_refactor = 0

    def _pivot(self, row: int, enter: int, w: np.ndarray):
        piv = w[row]
        ratio = self.xB[row] / piv
        self.xB -= ratio * w
        self.xB[row] = ratio
        prow = self.Binv[row] / piv
        self.Binv -= np.outer(w, prow)
        self.Binv[row] = prow
        self.is_basic[self.basis[row]] = False
        self.basis[row] = enter
        self.is_basic[enter] = True
        self.since_refactor += 1
        if self.since_refactor >= self.refactor_every:
            self._refactor()

    def _reduced_costs(self, cost_full: np.ndarray):
        y = cost_full[self.basis] @ self.Binv
        d = cost_full[: self.n] - self.A.T.dot(y)
        return y, d

    def _choose_entering(self, d: np.ndarray, bland: bool) -> int:
        cand = d < -self.tol
        cand &= ~self.is_basic[: self.n]
        if not cand.any():
            return -1
        idx = np.flatnonzero(cand)
        if bland:
            return int(idx[0])
        return int(idx[np.argmin(d[idx])])

    def _choose_leaving(self, w: np.ndarray, bland: bool, fixed_rows: np.ndarray) -> int:
        pos = w > self.pivot_tol
        # basic artificials at zero level must not move away from zero
        guard = fixed_rows & (np.abs(w) > self.pivot_tol)
        if guard.any():
            rows = np.flatnonzero(guard)
            return int(rows[np.argmin(self.basis[rows])]) if bland else int(rows[np.argmax(np.abs(w[rows]))])
        if not pos.any():
            return -1
        rows = np.flatnonzero(pos)
        ratios = np.maximum(self.xB[rows], 0.0) / w[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        if bland or ties.size == 1:
            return int(ties[np.argmin(self.basis[ties])])
        return int(ties[np.argmax(w[ties])])

    def _run(self, cost_full: np.ndarray, fixed_art: bool) -> None:
        stall = 0
        bland = self.rule == "bland"
        while True:
            if self.iterations >= self.max_iter:
                raise SolverError(f"iteration limit {self.max_iter} reached")
            y, d = self._reduced_costs(cost_full)
            use_bland = bland or stall >= self.stall_limit
            enter = self._choose_entering(d, use_bland)
            if enter < 0:
                if self.since_refactor:
                    self._refactor()
                    y, d = self._reduced_costs(cost_full)
                    if self._choose_entering(d, use_bland) >= 0:
                        continue
                return
            w = self.Binv @ self._column(enter)
            fixed_rows = (self.basis >= self.n) if fixed_art else np.zeros(self.r, bool)
            row = self._choose_leaving(w, use_bland, fixed_rows)
            if row < 0:
                raise SolverError("LP is unbounded")
            step = max(self.xB[row], 0.0) / w[row] if w[row] > 0 else 0.0
            stall = stall + 1 if step <= self.tol else 0
            if use_bland:
                self.bland_pivots += 1
            self._pivot(row, enter, w)
            self.xB[np.abs(self.xB) < 1e-15] = 0.0
            self.iterations += 1

    def solve(self) -> LPResult:
        r, n = self.r, self.n
        self.basis = np.arange(n, n + r)
        self.is_basic = np.zeros(n + r, dtype=bool)
        self.is_basic[n:] = True
        self._refactor()

        phase1_cost = np.concatenate([np.zeros(n), np.ones(r)])
        self._run(phase1_cost, fixed_art=False)
        self._refactor()
        infeas = float(self.xB[self.basis >= n].sum())
        if infeas > max(self.tol, 1e-9 * max(1.0, float(self.b.sum()))):
            raise InfeasibleError(f"phase 1 ended with residual infeasibility {infeas:.3e}")
        phase1_iterations = self.iterations
        self._drive_out_artificials()

        phase2_cost = np.concatenate([self.c, np.zeros(r)])
        self._run(phase2_cost, fixed_art=True)
        self._refactor()

        x = np.zeros(n)
        struct = self.basis < n
        x[self.basis[struct]] = self.xB[struct]
        primal_infeas = float(max(0.0, -x.min(initial=0.0)))
        x = np.maximum(x, 0.0)
        y, d = self._reduced_costs(phase2_cost)
        mask = ~self.is_basic[:n]
        min_rc = float(d[mask].min()) if mask.any() else 0.0
        return LPResult(
            x=x, y=y * self.row_sign, objective=float(self.c @ x),
            dual_objective=float(self.b @ y),
            basis=self.basis.copy(), iterations=self.iterations,
            phase1_iterations=phase1_iterations, bland_pivots=self.bland_pivots,
            max_primal_infeasibility=primal_infeas, min_reduced_cost=min_rc,
        )

    def _drive_out_artificials(self):
        """Pivot zero-level artificials out of the basis where a structural column allows.

        An artificial whose row of B^-1 A vanishes marks a redundant constraint;
        it stays basic at zero and its dual multiplier is zero.
        """
        for row in range(self.r):
            if self.basis[row] < self.n:
                continue
            alpha = self.A.T.dot(self.Binv[row])
            alpha[self.is_basic[: self.n]] = 0.0
            cand = np.flatnonzero(np.abs(alpha) > 1e-7)
            if cand.size == 0:
                continue
            enter = int(cand[np.argmax(np.abs(alpha[cand]))])
            w = self.Binv @ self._column(enter)
            self._pivot(row, enter, w)
            self.xB[row] = max(self.xB[row], 0.0)
            self.iterations += 1
        self._refactor()


def solve_lp(A, b, c, **kwargs) -> LPResult:
    return RevisedSimplex(A, b, c, **kwargs).solve()
