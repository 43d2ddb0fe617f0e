"""Optimal cost along refinements of a continuous marginal.

    python scripts/continuity_experiment.py [--out results/continuity.csv]

Three sequences: the uniform law on [0, 1] for N = 2 and N = 3 (equal-mass
quantile midpoints, compared with the cost of the cyclical map computed by
quadrature), and the uniform law on the unit square for N = 2 (cell averages,
Cauchy differences only).
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from repulsive_mot.analysis import (cyclic_continuum_cost, grid_discretization,
                                    marginal_continuity_experiment, quantile_discretization)
from repulsive_mot.cost import LogCost


def uniform_line(m):
    return quantile_discretization(lambda p: p, m)


def uniform_square(m):
    n = int(round(np.sqrt(m)))
    return grid_discretization(lambda x, y: np.ones_like(x), (0, 1, 0, 1), n)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/continuity.csv")
    args = ap.parse_args()
    f = LogCost()
    runs = [
        ("line-N2", uniform_line, [8, 16, 32, 64], 2, cyclic_continuum_cost(f, 2)),
        ("line-N3", uniform_line, [6, 12, 24], 3, cyclic_continuum_cost(f, 3)),
        ("square-N2", uniform_square, [9, 16, 36, 64], 2, None),
    ]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sequence", "m", "optimum", "gap", "doubling_difference", "reference"])
        for name, disc, grid, N, ref in runs:
            t = marginal_continuity_experiment(disc, grid, f, N, reference=ref)
            for k, (m, v, g) in enumerate(zip(t.resolutions, t.optima, t.gaps)):
                w.writerow([name, m, repr(v), repr(g),
                            repr(t.differences[k - 1]) if k else "",
                            "" if ref is None else repr(ref)])
            tail = "" if ref is None else f", |final - reference| = {t.final_error:.2e}"
            print(f"{name}: optima {[round(v, 6) for v in t.optima]}, "
                  f"differences {[f'{d:.1e}' for d in t.differences]}{tail}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
