"""Cost of the cyclical quantile-shift plan against the LP optimum on the line.

    python scripts/cyclic_map_experiment.py [--max-m 24] [--seed 0]
"""
import argparse

import numpy as np

from repulsive_mot.cost import LogCost, RieszCost, pair_cost_matrix
from repulsive_mot.maps import cyclic_map_1d, symmetric_plan_from_cyclic_map
from repulsive_mot.measure import DiscreteMeasure
from repulsive_mot.primal import solve_mot


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-m", type=int, default=24)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    costs = {"log": LogCost(), "riesz1": RieszCost(1.0), "riesz2": RieszCost(2.0)}
    print(f"{'N':>2} {'m':>3} {'cost':>7} {'plan':>14} {'LP':>14} {'diff':>9} cyclic")
    for N in (2, 3, 4):
        for m in range(max(N, 3), args.max_m + 1):
            if m % N:
                continue
            mu = DiscreteMeasure(np.sort(rng.uniform(0, 1, m)))
            for name, f in costs.items():
                T = cyclic_map_1d(mu, N)
                plan = symmetric_plan_from_cyclic_map(T).cost(pair_cost_matrix(mu.points, f))
                lp = solve_mot(mu, f, N).cost
                print(f"{N:>2} {m:>3} {name:>7} {plan:14.9f} {lp:14.9f} "
                      f"{abs(plan - lp):9.1e} {T.is_cyclic()}")


if __name__ == "__main__":
    main()
