"""Heuristic vs brute-force comparison harness (cost ratios and iteration statistics)."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .irls import SolverConfig
from .problem import generate_random_problem
from .search import HeuristicConfig, brute_force, greedy_heuristic


@dataclass(frozen=True)
class CompareConfig:
    n_list: tuple[int, ...] = (5, 6, 7)
    problems_per_n: int = 30
    dims: tuple[int, ...] = (2,)
    seed: int = 0
    omega: float = 1.0
    eta: float = 1e-6
    init: str = "mst"
    with_brute_force: bool = True
    workers: int | None = None


def problem_seed(seed: int, dim: int, n: int, index: int) -> int:
    """Independent per-problem seed derived from the run seed."""
    return int(np.random.SeedSequence([seed, dim, n, index]).generate_state(1)[0])


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("BOT_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _run_one(job: tuple) -> dict:
    dim, n, index, cfg = job
    pseed = problem_seed(cfg.seed, dim, n, index)
    problem = generate_random_problem(n, pseed, dim)
    geometry = SolverConfig(eta=cfg.eta)
    greedy = greedy_heuristic(problem, HeuristicConfig(omega=cfg.omega, seed=pseed, geometry=geometry, init=cfg.init))
    row = {
        "dim": dim, "n": n, "index": index, "problem_seed": pseed, "alpha": problem.alpha,
        "greedy_cost": greedy.cost,
        "iterations_tried": greedy.meta["iterations_tried"],
        "iterations_accepted": greedy.meta["iterations_accepted"],
        "greedy_time": greedy.meta["wall_time"],
    }
    if cfg.with_brute_force:
        exact = brute_force(problem, geometry, seed=pseed)
        row.update(brute_cost=exact.cost, brute_time=exact.meta["wall_time"], ratio=greedy.cost / exact.cost)
    return row


@dataclass
class CompareResult:
    config: dict
    rows: list[dict] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {"config": self.config, "rows": self.rows, "summary": self.summary, "wall_time": self.wall_time}


def summarize(rows: list[dict]) -> list[dict]:
    out = []
    for key in sorted({(r["dim"], r["n"]) for r in rows}):
        sub = [r for r in rows if (r["dim"], r["n"]) == key]
        its = np.array([r["iterations_tried"] for r in sub], dtype=float)
        s = {"dim": key[0], "n": key[1], "problems": len(sub),
             "mean_iterations": float(its.mean()), "std_iterations": float(its.std()),
             "mean_accepted": float(np.mean([r["iterations_accepted"] for r in sub])),
             "mean_greedy_time": float(np.mean([r["greedy_time"] for r in sub]))}
        if "ratio" in sub[0]:
            ratios = np.array([r["ratio"] for r in sub])
            s.update(mean_ratio=float(ratios.mean()), median_ratio=float(np.median(ratios)),
                     max_ratio=float(ratios.max()), min_ratio=float(ratios.min()),
                     mean_brute_time=float(np.mean([r["brute_time"] for r in sub])))
        out.append(s)
    return out


def run_compare(cfg: CompareConfig = CompareConfig()) -> CompareResult:
    t0 = time.perf_counter()
    jobs = [(d, n, i, cfg) for d in cfg.dims for n in cfg.n_list for i in range(cfg.problems_per_n)]
    workers = worker_count(cfg.workers)
    if workers == 1:
        rows = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, jobs))
    rows.sort(key=lambda r: (r["dim"], r["n"], r["index"]))
    return CompareResult(asdict(cfg), rows, summarize(rows), time.perf_counter() - t0)
