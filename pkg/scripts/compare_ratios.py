"""Heuristic vs brute-force cost ratios for small n (2D), written as JSON plus a text table.

    python scripts/compare_ratios.py --n 5 6 7 8 --problems 30 --out results/ratios.json
"""

import argparse
import json
from pathlib import Path

from branchedot.experiments import CompareConfig, run_compare


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[5, 6, 7])
    ap.add_argument("--problems", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default="results/ratios.json")
    args = ap.parse_args()
    res = run_compare(CompareConfig(n_list=tuple(args.n), problems_per_n=args.problems, seed=args.seed,
                                    workers=args.workers))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(res.to_dict(), indent=1) + "\n", encoding="utf-8")
    print(f"{'n':>3} {'mean':>9} {'median':>9} {'max':>9} {'iters':>7} {'t_greedy':>9} {'t_brute':>9}")
    for s in res.summary:
        print(f"{s['n']:>3} {s['mean_ratio']:9.5f} {s['median_ratio']:9.5f} {s['max_ratio']:9.5f} "
              f"{s['mean_iterations']:7.1f} {s['mean_greedy_time']:9.3f} {s['mean_brute_time']:9.3f}")
    print(f"total {res.wall_time:.1f}s -> {out}")


if __name__ == "__main__":
    main()
