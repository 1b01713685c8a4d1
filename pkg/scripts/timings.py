"""Wall-clock of the heuristic and of single geometry solves as n grows (recorded, not asserted).

    python scripts/timings.py --n 10 20 50 100 200 --reps 3
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from branchedot.irls import optimize_branching_points
from branchedot.problem import generate_random_problem
from branchedot.search import HeuristicConfig, greedy_heuristic
from branchedot.topology import mst_topology


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[10, 20, 50, 100])
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--out", default="results/timings.json")
    args = ap.parse_args()
    rows = []
    for n in args.n:
        for r in range(args.reps):
            p = generate_random_problem(n, 1000 * n + r, args.dim)
            t0 = time.perf_counter()
            geo = optimize_branching_points(mst_topology(p), p, init=r)
            t_geo = time.perf_counter() - t0
            sol = greedy_heuristic(p, HeuristicConfig(seed=r))
            rows.append({"n": n, "rep": r, "geometry_time": t_geo, "geometry_iters": geo.iterations,
                         "heuristic_time": sol.meta["wall_time"], "tries": sol.meta["iterations_tried"],
                         "cost": sol.cost})
        sub = [x for x in rows if x["n"] == n]
        print(f"n={n:4d} geometry {np.mean([x['geometry_time'] for x in sub]):.4f}s "
              f"heuristic {np.mean([x['heuristic_time'] for x in sub]):.2f}s "
              f"tries {np.mean([x['tries'] for x in sub]):.0f}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(rows, indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
