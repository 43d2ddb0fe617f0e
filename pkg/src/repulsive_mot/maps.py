"""Explicit optimal maps: the 1-D cyclical quantile shift and the N = 2 log map.

The cyclical map of a measure mu on the line with distribution function F is

    T(x) = F^-1(F(x) + 1/N)        if F(x) <= (N - 1)/N,
    T(x) = F^-1(F(x) + 1/N - 1)    otherwise,

with F^-1 the lower semicontinuous left inverse.  Its iterates generate the
plan (Id, T, ..., T^(N-1))_# mu.

For N = 2 and f = -log, a maximizer u of the dual touches the constraint
u(x) + u(y) + log|x - y| <= 0 on the optimal pairs, so its gradient satisfies
grad u(x) = (T(x) - x)/|T(x) - x|^2 and T(x) = x + grad u/|grad u|^2.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ValidationError
from .measure import DiscreteMeasure
from .primal import Coupling, symmetrize

QUANTILE_TOL = 1e-12
GRADIENT_FLOOR = 1e-8


def _require_1d(mu: DiscreteMeasure):
    if mu.dim != 1:
        raise ValidationError("the cyclical map needs a measure on the real line")


def _sorted(mu: DiscreteMeasure):
    order = np.argsort(mu.points[:, 0], kind="stable")
    return order, mu.points[order, 0], mu.weights[order]


def quantile_left_inverse(mu: DiscreteMeasure, p: float) -> float:
    """F^-1(p) = inf{x : F(x) >= p}; p = 0 returns the leftmost atom by convention."""
    _require_1d(mu)
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"probability {p} outside [0, 1]")
    _, x, w = _sorted(mu)
    cdf = np.cumsum(w)
    k = int(np.searchsorted(cdf, p - QUANTILE_TOL, side="left"))
    return float(x[min(k, x.size - 1)])


def quantile_shift_map(cdf: Callable[[float], float], quantile: Callable[[float], float],
                       N: int) -> Callable[[float], float]:
    """The cyclical map for a measure given by its distribution and quantile functions."""
    if N < 2:
        raise ValidationError("N must be at least 2")

    def T(x: float) -> float:
        F = cdf(x)
        if F <= (N - 1) / N:
            return quantile(F + 1.0 / N)
        return quantile(F + 1.0 / N - 1.0)

    return T


def _is_uniform(w: np.ndarray) -> bool:
    return bool(np.all(np.abs(w - 1.0 / w.size) <= 1e-15))


@dataclass(frozen=True)
class CyclicMap1D:
    """Cyclical map of an atomic measure on the line.

    ``image[i]`` is the index (in the measure's own point order) of T(x_i);
    ``branch[i]`` is 1 for the forward shift and 2 for the wrap-around.
    """

    measure: DiscreteMeasure
    N: int
    image: np.ndarray
    branch: np.ndarray
    exact: bool

    def __call__(self, x: float) -> float:
        """Evaluate the quantile formula at an arbitrary real x."""
        _, xs, w = _sorted(self.measure)
        cdf = np.cumsum(w)

        def F(t):
            k = int(np.searchsorted(xs, t, side="right"))
            return float(cdf[k - 1]) if k else 0.0

        return quantile_shift_map(F, lambda p: quantile_left_inverse(self.measure, p), self.N)(x)

    def iterate(self, k: int) -> np.ndarray:
        idx = np.arange(self.measure.size)
        for _ in range(k):
            idx = self.image[idx]
        return idx

    def is_cyclic(self) -> bool:
        """T^(N) = Id on every atom."""
        return bool(np.array_equal(self.iterate(self.N), np.arange(self.measure.size)))

    def pushforward_error(self) -> float:
        """max_i |(T_# mu)({x_i}) - mu({x_i})|."""
        push = np.bincount(self.image, weights=self.measure.weights, minlength=self.measure.size)
        return float(np.abs(push - self.measure.weights).max())

    def is_pushforward_exact(self, tol: float = 1e-12) -> bool:
        return self.pushforward_error() <= tol

    def rows(self) -> list[tuple[float, float, int]]:
        x = self.measure.points[:, 0]
        return [(float(x[i]), float(x[self.image[i]]), int(self.branch[i]))
                for i in np.argsort(x, kind="stable")]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "T(x)", "branch"])
        for row in self.rows():
            writer.writerow([repr(row[0]), repr(row[1]), row[2]])
        return buf.getvalue()


def cyclic_map_1d(mu: DiscreteMeasure, N: int) -> CyclicMap1D:
    """Cyclical quantile-shift map on the atoms of ``mu``.

    Uniform weights are handled in exact rational arithmetic (F(x_(i)) =
    (i+1)/m); otherwise the cumulative sums are compared with a 1e-12 slack.
    ``exact`` records whether the optimality statement applies, i.e. uniform
    weights with N dividing m.
    """
    _require_1d(mu)
    if N < 2:
        raise ValidationError("N must be at least 2")
    order, _, w = _sorted(mu)
    m = mu.size
    pos = np.empty(m, dtype=np.int64)
    branch = np.empty(m, dtype=np.int64)
    if _is_uniform(w):
        for i in range(m):
            F = Fraction(i + 1, m)
            if F <= Fraction(N - 1, N):
                p, branch[i] = F + Fraction(1, N), 1
            else:
                p, branch[i] = F + Fraction(1, N) - 1, 2
            # smallest j with (j + 1)/m >= p, and p = 0 maps to the first atom
            j = max(-(-p.numerator * m // p.denominator) - 1, 0)
            pos[i] = min(j, m - 1)
    else:
        cdf = np.cumsum(w)
        for i in range(m):
            F = cdf[i]
            if F <= (N - 1) / N + QUANTILE_TOL:
                p, branch[i] = F + 1.0 / N, 1
            else:
                p, branch[i] = F + 1.0 / N - 1.0, 2
            pos[i] = min(int(np.searchsorted(cdf, p - QUANTILE_TOL, side="left")), m - 1)
    image = np.empty(m, dtype=np.int64)
    image[order] = order[pos]
    br = np.empty(m, dtype=np.int64)
    br[order] = branch
    return CyclicMap1D(mu, N, image, br, exact=_is_uniform(w) and m % N == 0)


def plan_from_cyclic_map(T: CyclicMap1D) -> Coupling:
    """gamma_T = (Id, T, ..., T^(N-1))_# mu."""
    cols = [T.iterate(k) for k in range(T.N)]
    tuples = np.stack(cols, axis=1)
    return Coupling.from_entries(T.N, T.measure.size, zip(tuples.tolist(), T.measure.weights))


def symmetric_plan_from_cyclic_map(T: CyclicMap1D) -> Coupling:
    return symmetrize(plan_from_cyclic_map(T))


# --- N = 2 map from a potential ---------------------------------------------

@dataclass(frozen=True)
class MongeMapN2:
    points: np.ndarray
    gradient: np.ndarray
    values: np.ndarray
    defined: np.ndarray
    spacing: np.ndarray
    stencil: str = "eno2"

    def rows(self) -> list:
        out = []
        for x, t, ok in zip(self.points, self.values, self.defined):
            out.append((x.tolist(), t.tolist() if ok else None))
        return out

    def to_csv(self) -> str:
        d = self.points.shape[1]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        xs = ["x"] if d == 1 else [f"x{k}" for k in range(d)]
        ts = ["T(x)"] if d == 1 else [f"T{k}" for k in range(d)]
        writer.writerow(xs + ts + ["defined"])
        for x, t, ok in zip(self.points, self.values, self.defined):
            tv = [repr(float(v)) for v in t] if ok else [""] * d
            writer.writerow([repr(float(v)) for v in x] + tv + [int(ok)])
        return buf.getvalue()


def _grid_axes(points: np.ndarray, rtol: float = 1e-9):
    """Recognize a full tensor grid; returns per-axis sorted coordinates and spacings."""
    axes, spacing = [], []
    for k in range(points.shape[1]):
        vals = np.unique(points[:, k])
        if vals.size < 3:
            raise ValidationError("grid too small for the finite-difference stencil (need >= 3 per axis)")
        steps = np.diff(vals)
        h = steps.mean()
        if np.abs(steps - h).max() > rtol * max(1.0, abs(h)) * 1e3:
            raise ValidationError("support is not a regular grid")
        axes.append(vals)
        spacing.append(h)
    if np.prod([a.size for a in axes]) != points.shape[0]:
        raise ValidationError("support is not a full tensor-product grid")
    return axes, np.array(spacing)


def eno_derivative(u: np.ndarray, h: float) -> np.ndarray:
    """Second-order derivative estimate along a line, avoiding kinks.

    Among the centred stencil and the two one-sided three-point stencils, the
    one whose second difference is smallest in magnitude is used (ties favour
    the centred stencil).  Near a kink of a Lipschitz potential this picks the
    side that does not straddle the kink; end points use one-sided stencils.
    """
    n = u.size
    if n < 3:
        raise ValidationError("grid too small for the finite-difference stencil")
    d2 = np.full(n, np.inf)
    d2[1:-1] = np.abs(u[2:] - 2 * u[1:-1] + u[:-2])
    out = np.empty(n)
    for i in range(n):
        left = d2[i - 1] if i >= 2 else np.inf
        centre = d2[i]
        right = d2[i + 1] if i <= n - 3 else np.inf
        if np.isfinite(centre) and centre <= left and centre <= right:
            out[i] = (u[i + 1] - u[i - 1]) / (2 * h)
        elif left <= right:
            out[i] = (3 * u[i] - 4 * u[i - 1] + u[i - 2]) / (2 * h)
        else:
            out[i] = (-3 * u[i] + 4 * u[i + 1] - u[i + 2]) / (2 * h)
    return out


def recover_map_n2(u, rho: DiscreteMeasure, gradient_floor: float = GRADIENT_FLOOR) -> MongeMapN2:
    """T(x) = x + grad u(x)/|grad u(x)|^2 from a log-cost potential on a regular grid.

    Points where |grad u| falls below ``gradient_floor`` times the potential's
    scale (oscillation over diameter, at least 1) are flagged undefined.
    """
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    if vals.size != rho.size:
        raise ValidationError("potential and measure have different sizes")
    axes, h = _grid_axes(rho.points)
    shape = tuple(a.size for a in axes)
    idx = tuple(np.searchsorted(axes[k], rho.points[:, k]) for k in range(rho.dim))
    grid = np.empty(shape)
    grid[idx] = vals
    grads = []
    for k in range(rho.dim):
        g = np.apply_along_axis(eno_derivative, k, grid, h[k])
        grads.append(g[idx])
    grad = np.stack(grads, axis=1)
    norm2 = np.einsum("ij,ij->i", grad, grad)
    scale = max(1.0, float(np.ptp(vals)) / max(rho.diameter(), 1e-300))
    defined = np.sqrt(norm2) >= gradient_floor * scale
    T = np.full_like(rho.points, np.nan)
    T[defined] = rho.points[defined] + grad[defined] / norm2[defined, None]
    return MongeMapN2(points=np.array(rho.points), gradient=grad, values=T,
                      defined=defined, spacing=h)
