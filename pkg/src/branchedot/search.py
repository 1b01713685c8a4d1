"""Topology optimization: greedy randomized edge-rewiring heuristic and brute-force enumeration."""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .irls import SolverConfig, bot_cost, optimize_batch, optimize_branching_points, random_bp_init
from .problem import BotProblem
from .topology import (Topology, compute_edge_flows, double_factorial, enumerate_full_topologies, mst_topology,
                       star_topology)

BRUTE_FORCE_CAP = 10
BRUTE_FORCE_CHUNK = 4096
# final tight re-optimization; IRLS converges slowly at degenerate optima, so the
# default stopping rule can leave a gap well above eta
POLISH = SolverConfig(eta=1e-12, max_iters=20000, clip=1e-10)


@dataclass(frozen=True)
class HeuristicConfig:
    omega: float = 1.0
    seed: int = 0
    geometry: SolverConfig = SolverConfig()
    init: str = "mst"  # "mst", "star" or "given"
    topology: Topology | None = None  # used with init="given"
    bp_init: np.ndarray | None = None  # optional BP coords for init="given"
    polish: SolverConfig | None = POLISH  # applied once to the final state

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.init not in ("mst", "star", "given"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "given" and self.topology is None:
            raise ValueError("init='given' needs a topology")


@dataclass
class Solution:
    problem: BotProblem
    topology: Topology
    bp_coords: np.ndarray
    flows: np.ndarray
    cost: float
    meta: dict = field(default_factory=dict)

    @property
    def coords(self) -> np.ndarray:
        return np.vstack([self.problem.coords, self.bp_coords.reshape(-1, self.problem.dim)])

    def recomputed_cost(self) -> float:
        return bot_cost(self.topology, self.coords, self.flows, self.problem.alpha)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem.to_dict(),
            "topology": self.topology.to_dict(),
            "bp_coords": self.bp_coords.tolist(),
            "flows": self.flows.tolist(),
            "cost": self.cost,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Solution":
        problem = BotProblem.from_dict(data["problem"])
        topo = Topology.from_dict(data["topology"])
        bp = np.array(data["bp_coords"], dtype=float).reshape(topo.n_bps, problem.dim)
        flows = np.array(data["flows"], dtype=float)
        if len(flows) != len(topo.edges):
            raise ValueError("flows do not match topology edges")
        return cls(problem, topo, bp, flows, float(data["cost"]), dict(data.get("meta", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Solution":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def edge_node_distance(xi, xj, point) -> float:
    """Distance from point to the segment xi-xj."""
    xi, xj, point = (np.asarray(a, dtype=float) for a in (xi, xj, point))
    seg = xj - xi
    ss = float(np.dot(seg, seg))
    lam = 0.0 if ss == 0 else min(max(float(np.dot(point - xi, seg)) / ss, 0.0), 1.0)
    return float(np.linalg.norm(xi + lam * seg - point))


def kernel_probabilities(distances, omega: float = 1.0) -> np.ndarray:
    """p(e) proportional to exp(-d^2 / (omega d_min)^2); uniform over d == 0 edges if d_min is 0."""
    d = np.asarray(distances, dtype=float)
    dmin = d.min()
    if dmin == 0:
        p = (d == 0).astype(float)
    else:
        p = np.exp(-((d / (omega * dmin)) ** 2) + 1.0 / omega**2)
    return p / p.sum()


@dataclass
class SearchState:
    """Current tree: terminals 0..n-1, BPs n..n+m-1 with coordinates ``bp``."""

    problem: BotProblem
    edges: list[tuple[int, int]]
    bp: np.ndarray
    cost: float = math.inf
    geometry_iters: int = 0

    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def n_bps(self) -> int:
        return len(self.bp)

    def topology(self) -> Topology:
        return Topology(self.n, self.n_bps, tuple(self.edges))

    def coords(self) -> np.ndarray:
        return np.vstack([self.problem.coords, self.bp.reshape(-1, self.problem.dim)])


def _optimize(state: SearchState, geometry: SolverConfig) -> SearchState:
    topo = state.topology()
    res = optimize_branching_points(topo, state.problem, init=state.bp, config=geometry)
    return SearchState(state.problem, state.edges, res.bp_coords, res.cost, res.iterations)


@dataclass
class StepResult:
    accepted: bool
    state: SearchState
    reason: str = ""


def greedy_step(state: SearchState, removed_edge: tuple[int, int], rng: np.random.Generator,
                omega: float = 1.0, geometry: SolverConfig = SolverConfig()) -> StepResult:
    """Cut ``removed_edge``, splice the smaller side onto a kernel-sampled edge of the larger side.

    Returns an accepted StepResult with the re-optimized state iff it is strictly cheaper.
    """
    n = state.n
    edges = [e for e in state.edges if e != removed_edge]
    if len(edges) != len(state.edges) - 1:
        raise ValueError(f"edge {removed_edge} not in the current tree")
    u, v = removed_edge
    n_nodes = n + state.n_bps
    adj: list[set[int]] = [set() for _ in range(n_nodes)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    comp_u = _component(adj, u)
    size_u, size_v = len(comp_u), n_nodes - len(comp_u)
    # ties: the component holding the lower node id is treated as the smaller one
    u_small = size_u < size_v or (size_u == size_v and min(comp_u) == 0)
    leaf, anchor = (u, v) if u_small else (v, u)
    small = comp_u if u_small else set(range(n_nodes)) - comp_u

    bp = state.bp.copy()
    merged = None
    if anchor >= n and len(adj[anchor]) == 2:
        n1, n2 = sorted(adj[anchor])
        edges = [e for e in edges if anchor not in e] + [(n1, n2)]
        merged = (n1, n2)
        # relabel the last BP into the freed id
        last = n_nodes - 1
        if anchor != last:
            remap = {last: anchor}
            edges = [(remap.get(a, a), remap.get(b, b)) for a, b in edges]
            bp[anchor - n] = bp[last - n]
            leaf = remap.get(leaf, leaf)
            small = {remap.get(a, a) for a in small}
            merged = tuple(remap.get(a, a) for a in merged)
        bp = bp[:-1]
        n_nodes -= 1
    candidates = [e for e in edges if e[0] not in small and e[1] not in small]
    if not candidates:
        return StepResult(False, state, "no edge to reconnect to")
    x = np.vstack([state.problem.coords, bp.reshape(-1, state.problem.dim)])
    d = np.array([edge_node_distance(x[a], x[b], x[leaf]) for a, b in candidates])
    pick = int(rng.choice(len(candidates), p=kernel_probabilities(d, omega)))
    i, j = candidates[pick]
    new_bp_init = random_bp_init(state.problem, 1, rng)
    if merged is not None and {i, j} == set(merged):
        return StepResult(False, state, "reconnected to the removed configuration")
    b_new = n_nodes
    edges = [e for e in edges if e != (i, j)] + [(leaf, b_new), (b_new, i), (b_new, j)]
    bp = np.vstack([bp.reshape(-1, state.problem.dim), new_bp_init])
    trial = _optimize(SearchState(state.problem, edges, bp), geometry)
    if trial.cost < state.cost:
        return StepResult(True, trial, "cheaper")
    return StepResult(False, state, "not cheaper")


def _component(adj: list[set[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        a = queue.popleft()
        for b in adj[a]:
            if b not in seen:
                seen.add(b)
                queue.append(b)
    return seen


def initial_state(problem: BotProblem, config: HeuristicConfig, rng) -> SearchState:
    if config.init == "mst":
        topo = mst_topology(problem)
    elif config.init == "star":
        topo = star_topology(problem)
    else:
        topo = config.topology
        topo.check()
    if config.init == "given" and config.bp_init is not None:
        bp = np.array(config.bp_init, dtype=float).reshape(topo.n_bps, problem.dim)
    else:
        bp = random_bp_init(problem, topo.n_bps, rng)
    return _optimize(SearchState(problem, list(topo.edges), bp), config.geometry)


def _solution(state: SearchState, meta: dict) -> Solution:
    topo = state.topology()
    flows = compute_edge_flows(topo, state.problem).flow
    cost = bot_cost(topo, state.coords(), flows, state.problem.alpha)
    return Solution(state.problem, topo, state.bp.copy(), flows, cost, meta)


def greedy_heuristic(problem: BotProblem, config: HeuristicConfig = HeuristicConfig()) -> Solution:
    """Zero-temperature rewiring search; stops once every current edge was tried without improvement."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    state = initial_state(problem, config, rng)
    candidates = list(state.edges)
    tried = accepted = 0
    costs = [state.cost]
    while candidates:
        e_hat = candidates.pop(int(rng.integers(len(candidates))))
        tried += 1
        step = greedy_step(state, e_hat, rng, config.omega, config.geometry)
        if step.accepted:
            state = step.state
            accepted += 1
            costs.append(state.cost)
            candidates = list(state.edges)
    search_cost = state.cost
    if config.polish is not None:
        state = _optimize(state, config.polish)
    meta = {
        "solver": "greedy",
        "iterations_tried": tried,
        "iterations_accepted": accepted,
        "accepted_costs": costs,
        "search_cost": search_cost,
        "wall_time": time.perf_counter() - t0,
        "alpha": problem.alpha,
        "seed": config.seed,
        "omega": config.omega,
        "init": config.init,
        "eta": config.geometry.eta,
    }
    return _solution(state, meta)


def brute_force(problem: BotProblem, config: SolverConfig = SolverConfig(), seed: int = 0,
                cap: int = BRUTE_FORCE_CAP, record_costs: bool = False,
                polish: SolverConfig | None = POLISH, polish_rel: float = 1e-3, polish_max: int = 32) -> Solution:
    """Optimize the geometry of every full topology and return the cheapest (first on ties).

    Topologies within ``polish_rel`` of the best batch cost (at most ``polish_max``) are
    re-optimized with the ``polish`` config before the final selection.
    """
    n = problem.n
    if n < 3 or n > cap:
        raise ValueError(f"brute force supports 3 <= n <= {cap}, got {n}")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    all_costs: list[float] = []
    results: list[tuple[Topology, np.ndarray, float]] = []
    chunk: list[Topology] = []
    count = 0

    def flush():
        inits = np.stack([random_bp_init(problem, n - 2, rng) for _ in chunk])
        for topo, res in zip(chunk, optimize_batch(chunk, problem, inits, config)):
            all_costs.append(res.cost)
            results.append((topo, res.bp_coords, res.cost))
        chunk.clear()

    for topo in enumerate_full_topologies(n):
        chunk.append(topo)
        count += 1
        if len(chunk) == BRUTE_FORCE_CHUNK:
            flush()
            # keep only the candidates that can still matter
            results.sort(key=lambda r: r[2])
            del results[polish_max:]
    if chunk:
        flush()
    assert count == double_factorial(2 * n - 5)
    order = sorted(range(len(results)), key=lambda i: results[i][2])  # stable: first-found on ties
    floor = results[order[0]][2]
    best, best_cost, polished = None, math.inf, 0
    for i in order[: max(1, polish_max)]:
        topo, bp, cost = results[i]
        if polish is not None and cost <= floor * (1.0 + polish_rel):
            res = optimize_branching_points(topo, problem, init=bp, config=polish)
            bp, cost = res.bp_coords, res.cost
            polished += 1
        if cost < best_cost:
            best, best_cost = (topo, bp), cost
    topo, bp = best
    meta = {
        "solver": "brute_force",
        "n_topologies": count,
        "polished": polished,
        "wall_time": time.perf_counter() - t0,
        "alpha": problem.alpha,
        "seed": seed,
        "eta": config.eta,
    }
    if record_costs:
        meta["topology_costs"] = all_costs
    state = SearchState(problem, list(topo.edges), bp)
    return _solution(state, meta)
