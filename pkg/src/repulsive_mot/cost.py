"""Radial repulsive interactions f and the pairwise-sum N-body cost.

Every model maps a distance t >= 0 to f(t), with f(0) = +inf.  IEEE ``inf`` is
the sentinel for the singularity: it is exact and absorbs any finite summand.
Distances so small that f overflows saturate to the same +inf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .measure import pairwise_distances

INF = math.inf


class CostModel:
    """Base class: a continuous non-increasing f on (0, inf) with f(0+) = +inf."""

    family: str = ""
    strictly_decreasing = True

    def _eval_positive(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
            raise ValidationError("distances must be non-negative")
        out = np.full(t_arr.shape, INF)
        pos = t_arr > 0
        if np.any(pos):
            with np.errstate(over="ignore", divide="ignore"):
                out[pos] = self._eval_positive(t_arr[pos])
        return float(out) if out.ndim == 0 else out

    def inverse(self, y: float) -> float:
        """Left inverse inf{s > 0 : f(s) = y}."""
        raise NotImplementedError

    def lower_limit(self) -> float:
        """inf of f over (0, inf); values y below it have no preimage."""
        raise NotImplementedError

    def max_slope(self, alpha: float) -> float:
        """sup_{t >= alpha} |f'(t)|, the Lipschitz constant of f on [alpha, inf)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class LogCost(CostModel):
    """f(t) = -log t."""

    family = "log"

    def _eval_positive(self, t):
        return -np.log(t)

    def inverse(self, y):
        return math.exp(-y)

    def lower_limit(self):
        return -INF

    def max_slope(self, alpha):
        return 1.0 / alpha

    def to_dict(self):
        return {"family": "log"}


@dataclass(frozen=True)
class RieszCost(CostModel):
    """f(t) = t^{-s}; s = 1 is the Coulomb interaction."""

    s: float = 1.0
    family = "riesz"

    def __post_init__(self):
        if not self.s > 0:
            raise ValidationError("Riesz exponent s must be positive")

    def _eval_positive(self, t):
        return t ** (-self.s)

    def inverse(self, y):
        if not y > 0:
            raise ValidationError(f"{y} is outside the range (0, inf) of t^-s")
        return y ** (-1.0 / self.s)

    def lower_limit(self):
        return 0.0

    def max_slope(self, alpha):
        return self.s * alpha ** (-self.s - 1.0)

    def to_dict(self):
        return {"family": "riesz", "s": self.s}


@dataclass(frozen=True)
class WireCost(CostModel):
    """Potential of a uniformly charged wire, V(s) = -(1/(2 pi eps0)) log(s/s0).

    Gauss' law on a coaxial cylinder of radius R gives the field magnitude
    E(R) = 1/(2 pi eps0 R); integrating E = -V' yields the logarithm with the
    reference distance s0 as integration constant.
    """

    eps0: float = 1.0 / (2.0 * math.pi)
    s0: float = 1.0
    family = "wire"

    def __post_init__(self):
        if not (self.eps0 > 0 and self.s0 > 0):
            raise ValidationError("wire potential needs eps0 > 0 and s0 > 0")

    @property
    def strength(self) -> float:
        """The Gauss-law prefactor 1/(2 pi eps0)."""
        return 1.0 / (2.0 * math.pi * self.eps0)

    def _eval_positive(self, t):
        return -self.strength * np.log(t / self.s0)

    def inverse(self, y):
        return self.s0 * math.exp(-y / self.strength)

    def lower_limit(self):
        return -INF

    def max_slope(self, alpha):
        return self.strength / alpha

    def to_dict(self):
        return {"family": "wire", "eps0": self.eps0, "s0": self.s0}


@dataclass(frozen=True)
class TabulatedCost(CostModel):
    """User-sampled f, linearly interpolated between samples.

    Extrapolation rules:

    * ``t < t[0]``: logarithmic continuation f(t0) - k log(t/t0) with
      k = t0 * |first segment slope|, which joins with matching slope and
      blows up at 0 as required;
    * ``t > t[-1]``: constant f(t[-1]) (non-increasing, so admissible).

    Samples must be strictly increasing in t and strictly decreasing in f.
    """

    t: tuple = field(default=())
    f: tuple = field(default=())
    family = "tabulated"
    strictly_decreasing = False

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or t.size < 2:
            raise ValidationError("tabulated cost needs matching t and f arrays of length >= 2")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(f))):
            raise ValidationError("tabulated samples must be finite")
        if t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise ValidationError("tabulated t must be positive and strictly increasing")
        if np.any(np.diff(f) >= 0):
            raise ValidationError("tabulated f must be strictly decreasing")
        object.__setattr__(self, "t", tuple(t.tolist()))
        object.__setattr__(self, "f", tuple(f.tolist()))

    @property
    def _k(self) -> float:
        t0, t1 = self.t[0], self.t[1]
        return t0 * (self.f[0] - self.f[1]) / (t1 - t0)

    def _eval_positive(self, t):
        ts = np.asarray(self.t)
        fs = np.asarray(self.f)
        out = np.interp(t, ts, fs)
        small = t < ts[0]
        if np.any(small):
            out[small] = fs[0] - self._k * np.log(t[small] / ts[0])
        return out

    def inverse(self, y):
        # inf{s : f(s) = y}; f is continuous and non-increasing, so this is the
        # leftmost point of {f <= y}, located by bisection.
        if y < self.f[-1]:
            raise ValidationError(f"{y} is below the range of the tabulated cost")
        if y == self.f[-1]:
            return self.t[-1]
        if y >= self.f[0]:
            return self.t[0] * math.exp(-(y - self.f[0]) / self._k)
        lo, hi = self.t[0], self.t[-1]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if self(mid) <= y:
                hi = mid
            else:
                lo = mid
        return hi

    def lower_limit(self):
        return self.f[-1]

    def max_slope(self, alpha):
        ts = np.asarray(self.t)
        fs = np.asarray(self.f)
        q = np.abs(np.diff(fs) / np.diff(ts))
        # segment k spans [t_k, t_{k+1}] and matters when t_{k+1} > alpha
        slopes = q[ts[1:] > alpha]
        best = float(slopes.max()) if slopes.size else 0.0
        if alpha < ts[0]:
            best = max(best, self._k / alpha)
        return best

    def to_dict(self):
        return {"family": "tabulated", "t": list(self.t), "f": list(self.f)}


def cost_from_dict(doc: dict) -> CostModel:
    """Build a cost model from its JSON description."""
    if not isinstance(doc, dict) or "family" not in doc:
        raise ValidationError("cost description must be an object with a 'family' field")
    fam = str(doc["family"]).lower()
    try:
        if fam == "log":
            return LogCost()
        if fam == "riesz":
            return RieszCost(float(doc.get("s", 1.0)))
        if fam == "wire":
            return WireCost(float(doc["eps0"]), float(doc["s0"]))
        if fam == "tabulated":
            return TabulatedCost(tuple(doc["t"]), tuple(doc["f"]))
    except KeyError as exc:
        raise ValidationError(f"cost family {fam!r} is missing parameter {exc}") from None
    raise ValidationError(f"unknown cost family {fam!r}")


# --- truncation modes -----------------------------------------------------

@dataclass(frozen=True)
class Truncation:
    """Which variant of f enters the N-body cost.

    ``exact`` uses f itself, ``below`` uses f_R = max{f(R), f} (flattened tail),
    ``above`` uses min{level, f} (capped singularity).
    """

    kind: str = "exact"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "below", "above"):
            raise ValidationError(f"unknown truncation kind {self.kind!r}")
        if self.kind == "below" and not (self.value is not None and self.value > 0):
            raise ValidationError("below-truncation needs R > 0")
        if self.kind == "above" and (self.value is None or not math.isfinite(self.value)):
            raise ValidationError("above-truncation needs a finite level")

    @classmethod
    def exact(cls):
        return cls("exact")

    @classmethod
    def below(cls, R: float):
        return cls("below", float(R))

    @classmethod
    def above(cls, level: float):
        return cls("above", float(level))

    def to_dict(self) -> dict:
        if self.kind == "exact":
            return {"kind": "exact"}
        key = "R" if self.kind == "below" else "level"
        return {"kind": self.kind, key: self.value}

    @classmethod
    def from_dict(cls, doc) -> "Truncation":
        if doc is None:
            return cls.exact()
        if isinstance(doc, str):
            return cls(doc)
        kind = doc.get("kind", "exact")
        if kind == "below":
            return cls.below(doc["R"])
        if kind == "above":
            return cls.above(doc["level"])
        return cls(kind)


def f_eval(f: CostModel, t):
    return f(t)


def f_truncate_below(f: CostModel, R: float, t):
    """f_R(t) = f(t) for t < R and f(R) otherwise."""
    if not R > 0:
        raise ValidationError("truncation radius R must be positive")
    t_arr = np.asarray(t, dtype=float)
    out = np.where(t_arr < R, f(np.minimum(t_arr, R)), f(R))
    return float(out) if out.ndim == 0 else out


def f_truncate_above(f: CostModel, level: float, t):
    """min{level, f(t)}."""
    out = np.minimum(level, f(t))
    return float(out) if np.ndim(out) == 0 else out


def f_left_inverse(f: CostModel, y: float) -> float:
    """Left inverse inf{s : f(s) = y}; +inf maps to 0."""
    lo = f.lower_limit()
    attained = isinstance(f, TabulatedCost)
    if y < lo or (y == lo and not attained) or math.isnan(y):
        raise ValidationError(f"{y} is outside the range of the {f.family} cost")
    if math.isinf(y):
        return 0.0
    return f.inverse(y)


def apply_truncation(f: CostModel, trunc: Truncation, t):
    if trunc.kind == "below":
        return f_truncate_below(f, trunc.value, t)
    if trunc.kind == "above":
        return f_truncate_above(f, trunc.value, t)
    return f(t)


def pair_cost_matrix(points: np.ndarray, f: CostModel, trunc: Truncation = Truncation()) -> np.ndarray:
    """Matrix P[i, j] of the (truncated) interaction between support points i and j."""
    return np.asarray(apply_truncation(f, trunc, pairwise_distances(points)), dtype=float)


def tuple_cost(f: CostModel, points: Sequence, trunc: Truncation = Truncation()) -> float:
    """sum over unordered pairs i<j of the selected f-variant at d(x_i, x_j)."""
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    if len(pts) < 2:
        raise ValidationError("a tuple needs at least two points")
    if len({p.shape for p in pts}) != 1:
        raise ValidationError("all points of a tuple must have the same dimension")
    total = 0.0
    for a, b in combinations(pts, 2):
        total += float(apply_truncation(f, trunc, math.dist(a, b)))
    return total


def tuple_costs(P: np.ndarray, tuples: np.ndarray) -> np.ndarray:
    """Vectorized tuple cost for index tuples of shape (n, N) from a pair matrix."""
    N = tuples.shape[1]
    out = np.zeros(tuples.shape[0])
    for a, b in combinations(range(N), 2):
        out += P[tuples[:, a], tuples[:, b]]
    return out
