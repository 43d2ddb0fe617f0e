"""Seeded test corpus of small repulsive multi-marginal problems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import CostModel, LogCost, RieszCost, WireCost
from .measure import DiscreteMeasure

COST_FAMILIES: dict[str, CostModel] = {
    "log": LogCost(),
    "riesz1": RieszCost(1.0),
    "riesz2": RieszCost(2.0),
    "wire": WireCost(),
}


@dataclass(frozen=True)
class Instance:
    name: str
    rho: DiscreteMeasure
    f: CostModel
    N: int

    @property
    def m(self) -> int:
        return self.rho.size

    @property
    def tensor_size(self) -> int:
        return self.m ** self.N


def _points(rng: np.random.Generator, m: int, dim: int) -> np.ndarray:
    # rejection on near-coincident atoms keeps the instances well conditioned
    while True:
        pts = rng.uniform(0.0, 1.0, size=(m, dim))
        if dim == 1:
            pts = np.sort(pts, axis=0)
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
        if d[np.triu_indices(m, 1)].min() > 0.02:
            return pts


def _weights(rng: np.random.Generator, m: int, N: int, uniform: bool) -> np.ndarray:
    if uniform or m == N:
        return np.full(m, 1.0 / m)
    while True:
        w = 1.0 + 0.5 * (rng.uniform(size=m) - 0.5)
        w /= w.sum()
        if w.max() <= 1.0 / N:
            return w


def make_instance(seed: int, N: int, m: int, cost: str, dim: int = 1,
                  uniform: bool = False) -> Instance:
    rng = np.random.default_rng(seed)
    rho = DiscreteMeasure(_points(rng, m, dim), _weights(rng, m, N, uniform))
    tag = "u" if uniform or m == N else "w"
    return Instance(f"N{N}-m{m}-{cost}-d{dim}{tag}-s{seed}", rho, COST_FAMILIES[cost], N)


def default_corpus(seed: int = 2024) -> list[Instance]:
    """36 instances over N in {2, 3, 4}, m in 3..12, four cost families, dimensions 1 and 2."""
    costs = list(COST_FAMILIES)
    plan = (
        [(2, m) for m in range(3, 13)]
        + [(3, m) for m in (3, 4, 5, 6, 7, 8, 9, 10, 11, 12)]
        + [(4, m) for m in (4, 5, 6, 7, 8, 9, 10, 12)]
        + [(2, 4), (2, 6), (2, 8), (3, 4), (3, 6), (4, 6), (2, 12), (3, 9)]
    )
    out = []
    for k, (N, m) in enumerate(plan):
        out.append(make_instance(seed + k, N, m, costs[k % len(costs)],
                                 dim=1 + (k // 2) % 2, uniform=k % 3 == 0))
    return out


def concentrated_corpus(seed: int = 4048) -> list[Instance]:
    """N = 3 instances with m >= 13 uniform atoms, so the small-concentration bound 1/12 holds."""
    costs = list(COST_FAMILIES)
    plan = [(13, 1), (14, 2), (15, 1), (16, 2)]
    return [make_instance(seed + k, 3, m, costs[k % len(costs)], dim=d, uniform=True)
            for k, (m, d) in enumerate(plan)]
