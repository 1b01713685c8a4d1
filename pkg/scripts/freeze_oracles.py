"""Compute independent reference values and freeze them into tests/data/oracles.json.

The geometry oracle solves the fixed-topology problem as a second-order cone program
(cvxpy + Clarabel), with flows from a dense incidence-matrix solve; nothing from the
package's solvers is used. Needs cvxpy and scipy, which the package itself does not.

    python scripts/freeze_oracles.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import cvxpy as cp
import numpy as np
from scipy.optimize import minimize

from branchedot.problem import BotProblem, generate_random_problem
from branchedot.topology import Topology, enumerate_full_topologies

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def dense_flows(topo: Topology, mu: np.ndarray) -> np.ndarray:
    """Solve incidence @ flow = supply (least squares on the full-rank tree system)."""
    A = np.zeros((topo.n_nodes, len(topo.edges)))
    for k, (u, v) in enumerate(topo.edges):
        A[u, k] = 1.0
        A[v, k] = -1.0
    b = np.zeros(topo.n_nodes)
    b[: len(mu)] = mu
    flow, *_ = np.linalg.lstsq(A, b, rcond=None)
    return flow


def socp_cost(problem: BotProblem, topo: Topology) -> tuple[float, np.ndarray]:
    flows = dense_flows(topo, problem.mu)
    w = np.abs(flows) ** problem.alpha
    X = cp.Variable((topo.n_bps, problem.dim))
    x = problem.coords

    def pos(i):
        return x[i] if i < problem.n else X[i - problem.n]

    terms = [w[k] * cp.norm(pos(u) - pos(v), 2) for k, (u, v) in enumerate(topo.edges)]
    prob = cp.Problem(cp.Minimize(cp.sum(cp.hstack(terms))))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return float(prob.value), np.array(X.value)


def fermat_problem(alpha):
    return BotProblem.from_arrays([[0, 0], [1, 1], [1, -1]], [1.0, -0.5, -0.5], alpha)


def fermat_grid(alpha, step=1e-3):
    """Grid search over the single BP, refined by Nelder-Mead."""
    xs = np.arange(-0.5, 1.5 + step, step)
    ys = np.arange(-1.0, 1.0 + step, step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.array([[0, 0], [1, 1], [1, -1]], dtype=float)
    m = np.array([1.0, 0.5, 0.5]) ** alpha
    C = sum(m[i] * np.hypot(X - pts[i, 0], Y - pts[i, 1]) for i in range(3))
    i, j = np.unravel_index(np.argmin(C), C.shape)

    def cost(p):
        return float(sum(m[k] * np.linalg.norm(p - pts[k]) for k in range(3)))

    res = minimize(cost, [xs[i], ys[j]], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 10000})
    return float(min(res.fun, C[i, j])), res.x.tolist()


def main():
    rng = np.random.default_rng(20240607)
    ros = []
    for n, d in [(3, 2), (4, 2), (5, 2), (6, 2), (7, 2), (4, 3), (5, 3), (6, 5), (8, 2), (5, 2), (6, 3), (7, 2)]:
        seed = int(rng.integers(1 << 31))
        problem = generate_random_problem(n, seed, d)
        topos = list(enumerate_full_topologies(n))
        topo = topos[int(rng.integers(len(topos)))]
        cost, bp = socp_cost(problem, topo)
        ros.append({"n": n, "dim": d, "seed": seed, "problem": problem.to_dict(), "topology": topo.to_dict(),
                    "cost": cost, "bp": bp.tolist(), "flows": dense_flows(topo, problem.mu).tolist()})
    gos = []
    for seed in (11, 12, 13, 14):
        problem = generate_random_problem(5, seed)
        costs = [socp_cost(problem, t)[0] for t in enumerate_full_topologies(5)]
        gos.append({"seed": seed, "problem": problem.to_dict(), "cost": min(costs)})
    fermat = {}
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        grid, point = fermat_grid(alpha)
        star = Topology(3, 1, ((0, 3), (1, 3), (2, 3)))
        fermat[str(alpha)] = {"grid": grid, "grid_point": point, "socp": socp_cost(fermat_problem(alpha), star)[0]}
    fermat["closed_form"] = {"0.0": 1 + math.sqrt(3), "1.0": math.sqrt(2)}
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"ros": ros, "gos_n5": gos, "fermat": fermat}, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")
    for k, v in fermat.items():
        print(k, v)


if __name__ == "__main__":
    main()
