"""Quantitative certificates: off-diagonal radius, cost bound, truncation checks,
truncation sweeps and marginal-continuity experiments."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .cost import CostModel, Truncation, f_left_inverse
from .dual import certified_gap, extract_dual
from .errors import ValidationError
from .measure import DiscreteMeasure, ball_mass_sup, check_small_concentration, concentration_threshold
from .primal import Coupling, solve_mot

GAP_TOL = 1e-9


def offdiag_coefficient(N: int) -> float:
    return N * N * (N - 1) / 2.0


def cost_bound_coefficient(N: int) -> float:
    return N ** 3 * (N - 1) ** 2 / 4.0


def alpha_bound(f: CostModel, N: int, beta: float) -> float:
    """alpha* = f^-1( N^2 (N-1)/2 * f(beta) ); optimal plans keep pairs >= alpha* apart."""
    if not beta > 0:
        raise ValidationError("beta must be positive")
    return f_left_inverse(f, offdiag_coefficient(N) * float(f(beta)))


def select_beta(rho: DiscreteMeasure, N: int, k_max: int = 60) -> float:
    """Largest beta = 2^-k (k >= 1) with sup_x rho(B(x, beta)) below 1/(N (N-1)^2)."""
    if not check_small_concentration(rho, N).condition_a_ok:
        raise ValidationError(
            f"small-concentration condition fails for N={N}: largest atom "
            f"{rho.weights.max():.6g} >= {concentration_threshold(N):.6g}")
    thr = concentration_threshold(N)
    for k in range(1, k_max + 1):
        beta = 2.0 ** -k
        if ball_mass_sup(rho, beta) < thr:
            return beta
    raise ValidationError(f"no admissible beta >= 2^-{k_max}")


@dataclass
class DiagonalCertificate:
    beta: float | None
    alpha_star: float
    min_support_pair_distance: float
    passed: bool
    cost_upper_bound: float | None = None
    vacuous: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def min_pair_distance(gamma: Coupling, rho: DiscreteMeasure, threshold: float = 1e-10) -> float:
    D = rho.distances()
    keep = gamma.masses > threshold
    t = gamma.tuples[keep]
    best = math.inf
    for a, b in combinations(range(gamma.N), 2):
        if t.size:
            best = min(best, float(D[t[:, a], t[:, b]].min()))
    return best


def verify_off_diagonal(gamma: Coupling, rho: DiscreteMeasure, alpha: float,
                        beta: float | None = None) -> DiagonalCertificate:
    """Check that no supported tuple has two points closer than ``alpha``."""
    dmin = min_pair_distance(gamma, rho)
    return DiagonalCertificate(beta=beta, alpha_star=alpha, min_support_pair_distance=dmin,
                               passed=dmin >= alpha)


@dataclass
class BoundCheck:
    bound: float
    cost: float
    passed: bool
    vacuous: bool


def cost_upper_bound(f: CostModel, N: int, beta: float, solved_cost: float | None = None,
                     tol: float = GAP_TOL) -> BoundCheck:
    """Optimal cost <= N^3 (N-1)^2 / 4 * f(beta).

    When f(beta) <= 0 the parameters lie outside the small-beta regime the
    statement is meant for; the result is flagged vacuous rather than asserted.
    """
    fb = float(f(beta))
    bound = cost_bound_coefficient(N) * fb
    cost = math.nan if solved_cost is None else float(solved_cost)
    passed = solved_cost is None or cost <= bound + tol
    return BoundCheck(bound=bound, cost=cost, passed=passed, vacuous=fb <= 0)


@dataclass
class TruncationReport:
    beta: float
    alpha_star: float
    alpha: float
    level: float
    exact_cost: float
    truncated_cost: float
    cost_difference: float
    transfer_gap: float
    cost_bound: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def truncated_equality_check(rho: DiscreteMeasure, f: CostModel, N: int, *,
                             beta: float | None = None, alpha: float | None = None,
                             tol: float = GAP_TOL, **solve_kw) -> TruncationReport:
    """Compare the exact optimum with the optimum of the cost capped at f(alpha).

    Also re-certifies the exact primal with the potential of the capped problem.
    ``alpha`` defaults to alpha*/2.
    """
    beta = select_beta(rho, N) if beta is None else beta
    a_star = alpha_bound(f, N, beta)
    alpha = 0.5 * a_star if alpha is None else alpha
    if not 0 < alpha <= a_star:
        raise ValidationError("alpha must lie in (0, alpha*]")
    level = float(f(alpha))
    exact = solve_mot(rho, f, N, **solve_kw)
    capped = solve_mot(rho, f, N, Truncation.above(level), **solve_kw)
    u = extract_dual(capped)
    gap = certified_gap(u, exact.cost, rho, f, N)
    diff = abs(exact.cost - capped.cost)
    bound = cost_upper_bound(f, N, beta, exact.cost)
    return TruncationReport(
        beta=beta, alpha_star=a_star, alpha=alpha, level=level, exact_cost=exact.cost,
        truncated_cost=capped.cost, cost_difference=diff, transfer_gap=gap,
        cost_bound=bound.bound, passed=diff <= tol and abs(gap) <= tol and bound.passed,
    )


@dataclass
class SweepResult:
    radii: list[float]
    optima: list[float]
    gaps: list[float]
    exact_optimum: float
    diameter: float
    monotone: bool
    stabilized: bool
    rows: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R", "optimum", "gap", "monotone", "equals_exact"])
        for row in self.rows:
            w.writerow([repr(row["R"]), repr(row["optimum"]), repr(row["gap"]),
                        int(row["monotone"]), int(row["equals_exact"])])
        return buf.getvalue()


def gamma_sweep(rho: DiscreteMeasure, f: CostModel, N: int, radii: Sequence[float], *,
                tol: float = GAP_TOL, workers: int = 1, **solve_kw) -> SweepResult:
    """Optima of the below-truncated problems along an increasing grid of R."""
    radii = [float(R) for R in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValidationError("the R-grid must be strictly increasing")
    diam = rho.diameter()

    def run(R):
        s = solve_mot(rho, f, N, Truncation.below(R), **solve_kw)
        return s.cost, s.gap

    exact = solve_mot(rho, f, N, **solve_kw).cost
    if workers > 1 and len(radii) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, radii))
    else:
        results = [run(R) for R in radii]
    optima = [r[0] for r in results]
    gaps = [r[1] for r in results]
    rows, monotone, stabilized = [], True, True
    for k, (R, v, g) in enumerate(zip(radii, optima, gaps)):
        mono = k == 0 or v <= optima[k - 1] + tol
        eq = abs(v - exact) <= tol
        monotone &= mono
        if R >= diam:
            stabilized &= eq
        rows.append({"R": R, "optimum": v, "gap": g, "monotone": mono, "equals_exact": eq})
    return SweepResult(radii, optima, gaps, exact, diam, monotone, stabilized, rows)


# --- continuity in the marginal ------------------------------------------------

def quantile_discretization(quantile: Callable[[np.ndarray], np.ndarray], m: int) -> DiscreteMeasure:
    """Equal-mass discretization: atoms at the mid-cell quantiles (i + 1/2)/m."""
    p = (np.arange(m) + 0.5) / m
    return DiscreteMeasure(np.asarray(quantile(p), dtype=float))


def density_quantile(density: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                     n_grid: int = 20001) -> Callable[[np.ndarray], np.ndarray]:
    """Numerical quantile function of a density on [a, b] (trapezoidal CDF, linear inversion)."""
    x = np.linspace(a, b, n_grid)
    d = np.asarray(density(x), dtype=float)
    if np.any(d < 0):
        raise ValidationError("density must be non-negative")
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    return lambda p: np.interp(p, cdf, x)


def grid_discretization(density: Callable[[np.ndarray, np.ndarray], np.ndarray],
                        box: tuple[float, float, float, float], n: int, sub: int = 8) -> DiscreteMeasure:
    """2-D cell averaging: n x n cells of the box, mass by sub x sub midpoint rule."""
    x0, x1, y0, y1 = box
    hx, hy = (x1 - x0) / n, (y1 - y0) / n
    cx = x0 + (np.arange(n) + 0.5) * hx
    cy = y0 + (np.arange(n) + 0.5) * hy
    off = (np.arange(sub) + 0.5) / sub - 0.5
    pts, mass = [], []
    for xi in cx:
        for yj in cy:
            X, Y = np.meshgrid(xi + off * hx, yj + off * hy)
            mval = float(np.mean(density(X, Y))) * hx * hy
            if mval > 0:
                pts.append((xi, yj))
                mass.append(mval)
    w = np.array(mass)
    return DiscreteMeasure(np.array(pts), w / w.sum())


@dataclass
class ContinuityTable:
    resolutions: list[int]
    optima: list[float]
    gaps: list[float]
    differences: list[float]
    cauchy_decreasing: bool
    reference: float | None = None
    final_error: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "optimum", "gap", "doubling_difference"])
        for k, (m, v, g) in enumerate(zip(self.resolutions, self.optima, self.gaps)):
            diff = repr(self.differences[k - 1]) if k else ""
            w.writerow([m, repr(v), repr(g), diff])
        return buf.getvalue()


def marginal_continuity_experiment(discretize: Callable[[int], DiscreteMeasure],
                                   resolutions: Sequence[int], f: CostModel, N: int, *,
                                   reference: float | None = None, tol: float = 1e-12,
                                   last: int = 3, **solve_kw) -> ContinuityTable:
    """Optimal costs C(rho_m) along a refinement sequence and their Cauchy differences.

    ``cauchy_decreasing`` asks the consecutive differences |C(rho_{m_k+1}) -
    C(rho_{m_k})| to be non-increasing (up to ``tol``) over the last ``last``
    refinements.
    """
    res = [int(m) for m in resolutions]
    optima, gaps = [], []
    for m in res:
        s = solve_mot(discretize(m), f, N, **solve_kw)
        optima.append(s.cost)
        gaps.append(s.gap)
    diffs = [abs(b - a) for a, b in zip(optima, optima[1:])]
    tail = diffs[-last:]
    decreasing = all(b <= a + tol for a, b in zip(tail, tail[1:]))
    err = None if reference is None else abs(optima[-1] - reference)
    return ContinuityTable(res, optima, gaps, diffs, decreasing, reference, err)


def tail_diagnostic(measures: Sequence[DiscreteMeasure], f: CostModel, base_point,
                    radii: Sequence[float]) -> list[float]:
    """sup over the sequence of the tail mass |int_{d(x,o) >= r} f(2 d(x, o)) d rho_n| per radius.

    The diagnostic is evaluated over large radii: a sequence whose tails vanish
    uniformly as r grows has entries that decrease to zero along the grid.
    """
    o = np.atleast_1d(np.asarray(base_point, dtype=float))
    out = []
    for r in radii:
        if not r > 0:
            raise ValidationError("radii must be positive")
        worst = 0.0
        for mu in measures:
            d = np.linalg.norm(mu.points - o, axis=1)
            sel = d >= r
            if sel.any():
                worst = max(worst, abs(float(np.dot(mu.weights[sel], f(2.0 * d[sel])))))
        out.append(worst)
    return out


def cyclic_continuum_cost(f: CostModel, N: int) -> float:
    """Cost of the cyclical map for the uniform law on [0, 1], by quadrature.

    On [0, 1] the map is x -> x + 1/N (mod 1); the tuple generated from x is
    {(x + k/N) mod 1 : k < N}, and the plan cost is the integral over x of the
    pairwise costs of that tuple.
    """
    from scipy.integrate import quad

    def integrand(x):
        pts = [(x + k / N) % 1.0 for k in range(N)]
        return sum(float(f(abs(pts[a] - pts[b]))) for a, b in combinations(range(N), 2))

    breaks = [k / N for k in range(1, N)]
    val, _ = quad(integrand, 0.0, 1.0, points=breaks, limit=200)
    return float(val)


def lipschitz_certificate(rho: DiscreteMeasure, f: CostModel, N: int, *,
                          beta: float | None = None, tol: float = 1e-6, **solve_kw):
    """Potential of the problem capped at f(alpha*), canonicalized, then Lipschitz-checked.

    Returns (report, canonical potential, change history).
    """
    from .dual import canonicalize, lipschitz_report

    beta = select_beta(rho, N) if beta is None else beta
    a_star = alpha_bound(f, N, beta)
    level = float(f(a_star))
    capped = solve_mot(rho, f, N, Truncation.above(level), **solve_kw)
    u, hist = canonicalize(extract_dual(capped), f, rho, N, level)
    rep = lipschitz_report(u, rho, f, N, a_star, tol)
    rep.gap = capped.cost - u.dual_value(rho.weights, N)
    rep.iterations = len(hist)
    return rep, u, hist


def off_diagonal_certificate(rho: DiscreteMeasure, f: CostModel, N: int, gamma: Coupling,
                             cost: float, beta: float | None = None) -> DiagonalCertificate:
    """alpha* from a selected beta, checked against the support of an optimal plan."""
    beta = select_beta(rho, N) if beta is None else beta
    a_star = alpha_bound(f, N, beta)
    cert = verify_off_diagonal(gamma, rho, a_star, beta)
    bound = cost_upper_bound(f, N, beta, cost)
    cert.cost_upper_bound = bound.bound
    cert.vacuous = bound.vacuous
    if not bound.passed:
        cert.passed = False
    return cert


__all__ = [
    "alpha_bound", "select_beta", "verify_off_diagonal", "cost_upper_bound",
    "truncated_equality_check", "gamma_sweep", "marginal_continuity_experiment",
    "quantile_discretization", "density_quantile", "grid_discretization",
    "cyclic_continuum_cost", "tail_diagnostic", "lipschitz_certificate", "off_diagonal_certificate",
    "DiagonalCertificate", "SweepResult", "ContinuityTable", "TruncationReport",
]
