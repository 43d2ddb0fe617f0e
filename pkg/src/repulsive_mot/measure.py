"""Finitely supported probability measures on R^d and the standing assumptions.

The ambient metric space is R^d with the Euclidean distance.  A measure is a
list of pairwise distinct support points with strictly positive weights summing
to one.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ValidationError

WEIGHT_TOL = 1e-12


def distance(a, b) -> float:
    """Euclidean distance between two points given as coordinate sequences."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return math.dist(a, b)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    # rescale before squaring so tiny separations do not underflow to zero
    scale = np.abs(diff).max(axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    q = diff / safe[..., None]
    return np.sqrt(np.einsum("ijk,ijk->ij", q, q)) * scale


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure sum_i w_i delta_{x_i} with distinct atoms.

    Parameters
    ----------
    points : array_like, shape (m, d) or (m,)
        Support points. A 1-D array is read as m points on the real line.
    weights : array_like, shape (m,), optional
        Atom masses. Uniform when omitted.
    """

    points: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValidationError("points must be a non-empty (m, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("point coordinates must be finite")
        m = pts.shape[0]
        if self.weights is None:
            w = np.full(m, 1.0 / m)
        else:
            w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape != (m,):
            raise ValidationError(f"expected {m} weights, got {w.shape[0]}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValidationError("weights must be finite and strictly positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1 (use normalize)")
        if m > 1:
            d = pairwise_distances(pts)
            d[np.diag_indices(m)] = np.inf
            if np.any(d <= 0):
                i, j = np.argwhere(d <= 0)[0]
                raise ValidationError(f"duplicate support points {i} and {j} (use merge_duplicates)")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def distances(self) -> np.ndarray:
        """Matrix of pairwise distances between support points."""
        return pairwise_distances(self.points)

    def diameter(self) -> float:
        return float(self.distances().max()) if self.size > 1 else 0.0

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        if "points" not in data:
            raise ValidationError("measure document needs a 'points' field")
        pts = np.asarray(data["points"], dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        dim = data.get("dim")
        if dim is not None and pts.shape[1] != int(dim):
            raise ValidationError(f"declared dim {dim} but points have dim {pts.shape[1]}")
        return cls(pts, data.get("weights"))

    @classmethod
    def load(cls, path) -> "DiscreteMeasure":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        return cls(points)


def normalize(points, weights) -> DiscreteMeasure:
    """Build a measure after rescaling positive weights to unit total mass."""
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite and strictly positive")
    return DiscreteMeasure(points, w / w.sum())


def merge_duplicates(points, weights=None, tol: float = 0.0) -> DiscreteMeasure:
    """Merge atoms closer than ``tol`` (exact duplicates by default), summing mass.

    Atoms are merged greedily in input order into the first representative
    within distance ``tol``; the result is renormalized.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    m = pts.shape[0]
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)
    reps: list[np.ndarray] = []
    mass: list[float] = []
    for p, wi in zip(pts, w):
        for k, r in enumerate(reps):
            if np.linalg.norm(p - r) <= tol:
                mass[k] += wi
                break
        else:
            reps.append(p)
            mass.append(wi)
    return normalize(np.array(reps), np.array(mass))


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the small-concentration check (and optionally the moment check)."""

    N: int
    max_atom_mass: float
    concentration_threshold: float
    condition_a_ok: bool
    condition_b_ok: bool | None = None
    moment_value: float | None = None
    base_point: tuple | None = None
    radius: float | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def concentration_threshold(N: int) -> float:
    return 1.0 / (N * (N - 1) ** 2)


def check_small_concentration(mu: DiscreteMeasure, N: int) -> AssumptionReport:
    """Small-concentration condition for an atomic measure.

    Since atoms are distinct, the limit of the largest ball mass as the radius
    shrinks is simply the largest atom mass.
    """
    if N < 2:
        raise ValidationError("N must be at least 2")
    top = float(mu.weights.max())
    thr = concentration_threshold(N)
    return AssumptionReport(N=N, max_atom_mass=top, concentration_threshold=thr,
                            condition_a_ok=top < thr)


def check_moment_condition(mu: DiscreteMeasure, f: Callable, o, r0: float) -> tuple[bool, float]:
    """Return ``(ok, value)`` with value = sum over atoms outside B(o, r0) of w_i f(2 d(x_i, o)).

    ``f`` is any callable on distances (e.g. a :class:`~repulsive_mot.cost.CostModel`).
    The sum is finite for every finitely supported measure, so ``ok`` only
    fails on a non-finite evaluation.
    """
    if not r0 > 0:
        raise ValidationError("r0 must be positive")
    o = np.atleast_1d(np.asarray(o, dtype=float))
    if o.shape != (mu.dim,):
        raise ValidationError("base point dimension does not match the measure")
    d = np.linalg.norm(mu.points - o, axis=1)
    outside = d >= r0
    if not outside.any():
        return True, 0.0
    vals = np.asarray(f(2.0 * d[outside]), dtype=float)
    value = float(np.dot(mu.weights[outside], vals))
    return bool(np.isfinite(value)), value


def ball_mass_sup(mu: DiscreteMeasure, radius: float, rel_tol: float = 1e-12) -> float:
    """Upper bound for sup over x in R^d of mu(closed ball B(x, radius)).

    On the line the supremum is exact: a closed ball is an interval of length
    2*radius, so the maximal window mass is found by a two-pointer sweep over
    the sorted atoms. In higher dimension any ball of radius r meeting an atom
    a lies inside B(a, 2r), so the atom-centred masses at radius 2r bound the
    supremum from above. Boundary atoms count as inside (relative slack
    ``rel_tol``), which keeps the bound conservative.
    """
    slack = 1.0 + rel_tol
    if mu.dim == 1:
        order = np.argsort(mu.points[:, 0])
        x = mu.points[order, 0]
        w = mu.weights[order]
        best, acc, lo = 0.0, 0.0, 0
        for hi in range(x.size):
            acc += w[hi]
            while x[hi] - x[lo] > 2.0 * radius * slack:
                acc -= w[lo]
                lo += 1
            best = max(best, acc)
        return float(best)
    inside = mu.distances() <= 2.0 * radius * slack
    return float((inside * mu.weights[None, :]).sum(axis=1).max())
