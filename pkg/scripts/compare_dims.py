"""Cost ratio vs dimension: the same comparison in d = 2..5.

    python scripts/compare_dims.py --n 5 6 7 --dims 2 3 4 5 --problems 20
"""

import argparse
import json
from pathlib import Path

from branchedot.experiments import CompareConfig, run_compare


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[5, 6, 7])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--problems", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/dims.json")
    args = ap.parse_args()
    res = run_compare(CompareConfig(n_list=tuple(args.n), problems_per_n=args.problems, dims=tuple(args.dims),
                                    seed=args.seed))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(res.to_dict(), indent=1) + "\n", encoding="utf-8")
    for s in res.summary:
        print(f"d={s['dim']} n={s['n']} mean={s['mean_ratio']:.5f} max={s['max_ratio']:.5f}")


if __name__ == "__main__":
    main()
