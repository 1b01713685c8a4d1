"""Command-line front end: generate | solve | brute | compare | verify-inequality | render."""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import asdict
from pathlib import Path

from .experiments import CompareConfig, run_compare
from .inequality import DEFAULT_MAX_DEPTH, DEFAULT_THRESHOLD, verify_region
from .irls import SolverConfig
from .problem import generate_random_problem, load_problem, save_problem
from .render import render_svg
from .search import HeuristicConfig, Solution, brute_force, greedy_heuristic


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")


def _manifest(args, command: str, config: dict, seeds: dict, inputs: list, outputs: list, wall: float) -> dict:
    return {
        "command": command,
        "argv": sys.argv[1:],
        "config": config,
        "seeds": seeds,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "wall_time": wall,
    }


def _save_manifest(out, manifest: dict) -> None:
    _write_json(str(out) + ".manifest.json", manifest)


def cmd_generate(args) -> None:
    if args.n < 2:
        raise _Usage(f"generate needs --n >= 2, got {args.n}")
    if args.dim < 2:
        raise _Usage(f"generate needs --dim >= 2, got {args.dim}")
    problem = generate_random_problem(args.n, args.seed, args.dim)
    save_problem(problem, args.out)


def cmd_solve(args) -> None:
    t0 = time.perf_counter()
    problem = load_problem(args.problem)
    cfg = HeuristicConfig(omega=args.omega, seed=args.seed, geometry=SolverConfig(eta=args.eta), init=args.init)
    sol = greedy_heuristic(problem, cfg)
    sol.save(args.out)
    config = {"omega": cfg.omega, "init": cfg.init, "geometry": asdict(cfg.geometry)}
    _save_manifest(args.out, _manifest(args, "solve", config, {"seed": args.seed}, [args.problem], [args.out],
                                       time.perf_counter() - t0))


def cmd_brute(args) -> None:
    t0 = time.perf_counter()
    problem = load_problem(args.problem)
    geometry = SolverConfig(eta=args.eta)
    sol = brute_force(problem, geometry, seed=args.seed)
    sol.save(args.out)
    _save_manifest(args.out, _manifest(args, "brute", {"geometry": asdict(geometry)}, {"seed": args.seed},
                                       [args.problem], [args.out], time.perf_counter() - t0))


def cmd_compare(args) -> None:
    cfg = CompareConfig(n_list=tuple(args.n), problems_per_n=args.problems, dims=tuple(args.dims), seed=args.seed,
                        omega=args.omega, eta=args.eta, init=args.init, with_brute_force=not args.no_brute,
                        workers=args.workers)
    res = run_compare(cfg)
    _write_json(args.out, res.to_dict())
    _save_manifest(args.out, _manifest(args, "compare", asdict(cfg), {"seed": args.seed}, [], [args.out],
                                       res.wall_time))
    for s in res.summary:
        line = f"d={s['dim']} n={s['n']} iters={s['mean_iterations']:.1f}"
        if "mean_ratio" in s:
            line += f" mean_ratio={s['mean_ratio']:.5f} median_ratio={s['median_ratio']:.5f} max_ratio={s['max_ratio']:.5f}"
        print(line)


def cmd_verify(args) -> None:
    rep = verify_region(args.eps, args.delta, args.threshold, args.max_depth)
    _write_json(args.out, rep.to_dict())
    config = {"eps": args.eps, "delta": args.delta, "threshold": args.threshold, "max_depth": args.max_depth}
    _save_manifest(args.out, _manifest(args, "verify-inequality", config, {}, [], [args.out], rep.wall_time))
    print(f"all_positive={rep.all_positive} cuboids={rep.cuboids_processed} depth={rep.max_depth}")
    if not rep.all_positive:
        raise RuntimeError(f"certification failed: {rep.reason}")


def cmd_render(args) -> None:
    try:
        sol = Solution.load(args.solution)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed solution file {args.solution}: {exc}") from exc
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        svg = render_svg(sol)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    Path(args.out).write_text(svg, encoding="utf-8")


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="branchedot", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random problem")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="greedy heuristic on a problem file")
    s.add_argument("problem")
    s.add_argument("--init", choices=("star", "mst"), default="mst")
    s.add_argument("--omega", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eta", type=float, default=1e-6)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("brute", help="exact solution by topology enumeration")
    b.add_argument("problem")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--eta", type=float, default=1e-6)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_brute)

    c = sub.add_parser("compare", help="heuristic vs brute force on random problems")
    c.add_argument("--n", type=int, nargs="+", default=[5, 6, 7])
    c.add_argument("--problems", type=int, default=30)
    c.add_argument("--dims", type=int, nargs="+", default=[2])
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--omega", type=float, default=1.0)
    c.add_argument("--eta", type=float, default=1e-6)
    c.add_argument("--init", choices=("star", "mst"), default="mst")
    c.add_argument("--no-brute", action="store_true", help="heuristic statistics only")
    c.add_argument("--workers", type=int, default=None)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("verify-inequality", help="certify the 4-branching inequality by cuboid subdivision")
    v.add_argument("--eps", type=float, default=1e-3)
    v.add_argument("--delta", type=float, default=1e-3)
    v.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    v.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("render", help="SVG figure of a solution file")
    r.add_argument("solution")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except _Usage as exc:
        parser.error(str(exc))
    except Exception as exc:  # one machine-parsable line, nonzero exit
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
