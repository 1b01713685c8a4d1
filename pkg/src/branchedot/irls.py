"""BP geometry optimization for a fixed tree topology by iteratively reweighted least squares.

Each iteration minimizes the quadratic surrogate
    sum_e w_e |x_i - x_j|^2,   w_e = |m_e|^alpha * |x_i^(k) - x_j^(k)|^(beta - 2)
over the BP positions; on a tree this linear system is solved exactly in
O((n + m) d) by eliminating leaves of the BP forest (terminals are constants).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .problem import BotProblem
from .topology import FlowAssignment, Topology, compute_edge_flows

# Relative floor for zero-flow edge weights (alpha > 0), keeps the system non-singular.
ZERO_FLOW_WEIGHT = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    eta: float = 1e-6
    max_iters: int = 2000
    clip: float = 1e-7
    beta: float = 1.0

    def __post_init__(self):
        if self.eta <= 0 or self.clip <= 0 or self.beta < 1 or self.max_iters < 1:
            raise ValueError(f"invalid solver config {self}")


@dataclass
class GeometryResult:
    bp_coords: np.ndarray
    cost: float
    iterations: int
    cost_trace: list[float] = field(default_factory=list)
    converged: bool = True


def _flow_array(flows) -> np.ndarray:
    return flows.flow if isinstance(flows, FlowAssignment) else np.asarray(flows, dtype=float)


def mass_weights(flows, alpha: float) -> np.ndarray:
    # numpy gives 0.0 ** 0.0 == 1.0, the ESTP convention
    return np.abs(_flow_array(flows)) ** alpha


def bot_cost(topology: Topology, coords, flows, alpha: float, beta: float = 1.0) -> float:
    """sum_e |m_e|^alpha |x_i - x_j|^beta over all edges; coords cover every node."""
    coords = np.asarray(coords, dtype=float)
    if not topology.edges:
        return 0.0
    e = np.asarray(topology.edges)
    lengths = np.linalg.norm(coords[e[:, 0]] - coords[e[:, 1]], axis=1)
    return float(np.sum(mass_weights(flows, alpha) * lengths**beta))


class EliminationPlan:
    """Precomputed leaf-elimination order of the BP forest of a topology."""

    def __init__(self, topology: Topology):
        n, m = topology.n_terminals, topology.n_bps
        self.n, self.m = n, m
        e = np.asarray(topology.edges, dtype=int).reshape(-1, 2)
        self.eu, self.ev = e[:, 0], e[:, 1]
        u_bp, v_bp = self.eu >= n, self.ev >= n
        bb = u_bp & v_bp
        self.bb_edges = np.nonzero(bb)[0]
        # BP-terminal edges as (edge index, bp local id, terminal id)
        bt = u_bp & ~v_bp
        tb = ~u_bp & v_bp
        self.bt_edge = np.concatenate([np.nonzero(bt)[0], np.nonzero(tb)[0]])
        self.bt_bp = np.concatenate([self.eu[bt], self.ev[tb]]) - n
        self.bt_term = np.concatenate([self.ev[bt], self.eu[tb]])
        # BP-BP incidence for the diagonal
        self.bb_u = self.eu[bb] - n
        self.bb_v = self.ev[bb] - n

        nbrs: list[dict[int, int]] = [dict() for _ in range(m)]
        for k, a, b in zip(self.bb_edges, self.bb_u, self.bb_v):
            nbrs[a][b] = k
            nbrs[b][a] = k
        heap = [i for i in range(m) if len(nbrs[i]) <= 1]
        heapq.heapify(heap)
        done = [False] * m
        order = []  # (bp, parent bp or -1, edge index or -1)
        while heap:
            i = heapq.heappop(heap)
            if done[i]:
                continue
            done[i] = True
            if nbrs[i]:
                (p, k), = nbrs[i].items()
                del nbrs[p][i]
                nbrs[i].clear()
                order.append((i, p, k))
                if len(nbrs[p]) <= 1:
                    heapq.heappush(heap, p)
            else:
                order.append((i, -1, -1))
        if len(order) != m:
            raise ValueError("BP subgraph contains a cycle")
        self.order = order

    def assemble(self, coords: np.ndarray, mass_w: np.ndarray, clip: float, beta: float):
        """Edge weights, BP diagonal and right-hand side of the linearized system."""
        n, m = self.n, self.m
        lengths = np.linalg.norm(coords[self.eu] - coords[self.ev], axis=1)
        if beta == 2.0:
            w = mass_w.copy()
        else:
            w = mass_w * np.maximum(lengths, clip) ** (beta - 2.0)
        diag = np.zeros(m)
        np.add.at(diag, self.bt_bp, w[self.bt_edge])
        np.add.at(diag, self.bb_u, w[self.bb_edges])
        np.add.at(diag, self.bb_v, w[self.bb_edges])
        rhs = np.zeros((m, coords.shape[1]))
        np.add.at(rhs, self.bt_bp, w[self.bt_edge, None] * coords[self.bt_term])
        return w, diag, rhs

    def eliminate(self, w: np.ndarray, diag: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Solve the tree-structured system column-wise; rhs has shape (m, d)."""
        diag = diag.copy()
        rhs = rhs.copy()
        for i, p, k in self.order:
            if p >= 0:
                c = w[k] / diag[i]
                diag[p] -= c * w[k]
                rhs[p] += c * rhs[i]
        x = np.empty_like(rhs)
        for i, p, k in reversed(self.order):
            if p >= 0:
                x[i] = (rhs[i] + w[k] * x[p]) / diag[i]
            else:
                x[i] = rhs[i] / diag[i]
        return x


def _floored_mass_weights(flows, alpha: float) -> np.ndarray:
    mw = mass_weights(flows, alpha)
    if mw.size and np.any(mw == 0):
        mw = np.maximum(mw, ZERO_FLOW_WEIGHT * mw.max())
    return mw


def irls_iteration(topology: Topology, coords, flows, alpha: float, clip: float = 1e-7,
                   beta: float = 1.0, plan: EliminationPlan | None = None) -> np.ndarray:
    """One reweighted linear solve; returns the new BP coordinates, shape (m, d)."""
    coords = np.asarray(coords, dtype=float)
    plan = plan or EliminationPlan(topology)
    w, diag, rhs = plan.assemble(coords, _floored_mass_weights(flows, alpha), clip, beta)
    return plan.eliminate(w, diag, rhs)


def bp_gradient(topology: Topology, coords, flows, alpha: float, beta: float = 1.0, clip: float = 1e-7):
    """Analytic gradient of the cost w.r.t. BP positions.

    Returns (grad of shape (m, d), undefined mask of shape (m,)); a BP is
    undefined when any incident edge is not longer than clip.
    """
    coords = np.asarray(coords, dtype=float)
    n, m = topology.n_terminals, topology.n_bps
    e = np.asarray(topology.edges, dtype=int).reshape(-1, 2)
    diff = coords[e[:, 0]] - coords[e[:, 1]]
    lengths = np.linalg.norm(diff, axis=1)
    mw = mass_weights(flows, alpha)
    safe = np.where(lengths > 0, lengths, 1.0)
    g_edge = (mw * beta * safe ** (beta - 2.0))[:, None] * diff  # d/dx_u of edge cost
    grad = np.zeros((n + m, coords.shape[1]))
    np.add.at(grad, e[:, 0], g_edge)
    np.add.at(grad, e[:, 1], -g_edge)
    undefined = np.zeros(n + m, dtype=bool)
    short = lengths <= clip
    undefined[e[short, 0]] = True
    undefined[e[short, 1]] = True
    return grad[n:], undefined[n:]


def random_bp_init(problem: BotProblem, n_bps: int, rng) -> np.ndarray:
    rng = np.random.default_rng(rng)
    lo, hi = problem.coords.min(axis=0), problem.coords.max(axis=0)
    return rng.uniform(lo, hi, size=(n_bps, problem.dim))


def optimize_branching_points(topology: Topology, problem: BotProblem, init=None,
                              config: SolverConfig = SolverConfig(), flows=None) -> GeometryResult:
    """Iterate the reweighted solve until the relative cost improvement drops to eta.

    ``init`` is an (m, d) array of BP positions, or a seed / Generator for a
    uniform draw in the terminals' bounding box.
    """
    n, m = topology.n_terminals, topology.n_bps
    if flows is None:
        flows = compute_edge_flows(topology, problem)
    if init is None or isinstance(init, (int, np.integer, np.random.Generator)):
        bp = random_bp_init(problem, m, init)
    else:
        bp = np.array(init, dtype=float).reshape(m, problem.dim)
    coords = np.vstack([problem.coords, bp])
    alpha, beta = problem.alpha, config.beta
    cost = bot_cost(topology, coords, flows, alpha, beta)
    trace = [cost]
    if m == 0:
        return GeometryResult(bp, cost, 0, trace, True)
    plan = EliminationPlan(topology)
    mw = _floored_mass_weights(flows, alpha)
    old = np.inf
    it = 0
    converged = True
    while cost > 0 and (old - cost) / cost > config.eta:
        if it >= config.max_iters:
            converged = False
            break
        old = cost
        w, diag, rhs = plan.assemble(coords, mw, config.clip, beta)
        coords[n:] = plan.eliminate(w, diag, rhs)
        cost = bot_cost(topology, coords, flows, alpha, beta)
        trace.append(cost)
        it += 1
    return GeometryResult(coords[n:].copy(), cost, it, trace, converged)


def optimize_batch(topologies: list[Topology], problem: BotProblem, inits: np.ndarray,
                   config: SolverConfig = SolverConfig()) -> list[GeometryResult]:
    """Same iteration as optimize_branching_points, run on many same-size topologies at once.

    The per-topology linear systems are tiny, so they are solved as one
    stacked dense solve per iteration. ``inits`` has shape (B, m, d).
    """
    B = len(topologies)
    if B == 0:
        return []
    n, m = topologies[0].n_terminals, topologies[0].n_bps
    d = problem.dim
    alpha, beta, clip = problem.alpha, config.beta, config.clip
    edges = np.array([t.edges for t in topologies], dtype=int)  # (B, E, 2)
    flows = np.array([compute_edge_flows(t, problem).flow for t in topologies])
    mass_all = np.abs(flows) ** alpha
    mw = mass_all.copy()
    zero = mw == 0
    if zero.any():
        mw = np.maximum(mw, ZERO_FLOW_WEIGHT * mw.max(axis=1, keepdims=True))
    X = np.empty((B, n + m, d))
    X[:, :n] = problem.coords
    X[:, n:] = inits
    eu, ev = edges[..., 0], edges[..., 1]
    bidx = np.arange(B)[:, None]

    def costs(Xs, sel):
        L = np.linalg.norm(Xs[bidx[: len(sel)], eu[sel]] - Xs[bidx[: len(sel)], ev[sel]], axis=2)
        return np.sum(mass_all[sel] * L**beta, axis=1)

    cost = costs(X, np.arange(B))
    traces = [[c] for c in cost]
    old = np.full(B, np.inf)
    iters = np.zeros(B, dtype=int)
    converged = np.zeros(B, dtype=bool)
    active = np.nonzero(cost > 0)[0]
    converged[cost <= 0] = True
    while active.size:
        rel = (old[active] - cost[active]) / cost[active]
        keep = rel > config.eta
        converged[active[~keep]] = True
        active = active[keep]
        capped = iters[active] >= config.max_iters
        active = active[~capped]
        if not active.size:
            break
        Xa = X[active]
        a = len(active)
        ba = bidx[:a]
        ua, va = eu[active], ev[active]
        L = np.linalg.norm(Xa[ba, ua] - Xa[ba, va], axis=2)
        w = mw[active] if beta == 2.0 else mw[active] * np.maximum(L, clip) ** (beta - 2.0)
        A = np.zeros((a, m, m))
        rhs = np.zeros((a, m, d))
        ub, vb = ua >= n, va >= n
        bb = np.broadcast_to(ba, ua.shape)
        # diagonal
        np.add.at(A, (bb[ub], ua[ub] - n, ua[ub] - n), w[ub])
        np.add.at(A, (bb[vb], va[vb] - n, va[vb] - n), w[vb])
        both = ub & vb
        np.add.at(A, (bb[both], ua[both] - n, va[both] - n), -w[both])
        np.add.at(A, (bb[both], va[both] - n, ua[both] - n), -w[both])
        ut = ub & ~vb
        np.add.at(rhs, (bb[ut], ua[ut] - n), w[ut][:, None] * Xa[bb[ut], va[ut]])
        tv = ~ub & vb
        np.add.at(rhs, (bb[tv], va[tv] - n), w[tv][:, None] * Xa[bb[tv], ua[tv]])
        X[active, n:] = np.linalg.solve(A, rhs)
        old[active] = cost[active]
        cost[active] = costs(X[active], active)
        iters[active] += 1
        for i in active:
            traces[i].append(cost[i])
    return [
        GeometryResult(X[b, n:].copy(), float(cost[b]), int(iters[b]), [float(c) for c in traces[b]],
                       bool(converged[b]))
        for b in range(B)
    ]
