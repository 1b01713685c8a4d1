"""Tree topologies over terminals and branching points (BPs).

Node ids: terminals are 0..n-1, BPs are n..n+m-1. Edges are stored as
unordered pairs; flows carry a sign relative to the stored orientation
(positive = mass moves from ``edge[0]`` to ``edge[1]``).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .problem import BotProblem


class InvalidTopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    n_terminals: int
    n_bps: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))

    @property
    def n_nodes(self) -> int:
        return self.n_terminals + self.n_bps

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def is_tree(self) -> bool:
        if len(self.edges) != self.n_nodes - 1:
            return False
        if any(not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes) or u == v for u, v in self.edges):
            return False
        return len(_bfs_order(self.adjacency(), 0)[0]) == self.n_nodes

    def is_full(self) -> bool:
        deg = self.degrees()
        return (
            self.n_bps == self.n_terminals - 2
            and self.is_tree()
            and bool(np.all(deg[: self.n_terminals] == 1))
            and bool(np.all(deg[self.n_terminals :] == 3))
        )

    def check(self) -> None:
        if not self.is_tree():
            raise InvalidTopologyError(
                f"edges do not form a tree on {self.n_nodes} nodes ({len(self.edges)} edges)"
            )

    def to_dict(self) -> dict:
        return {"n_terminals": self.n_terminals, "n_bps": self.n_bps, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "Topology":
        return cls(int(data["n_terminals"]), int(data["n_bps"]), tuple(tuple(e) for e in data["edges"]))


FullTreeTopology = Topology  # refinement checked by Topology.is_full()


@dataclass(frozen=True)
class FlowAssignment:
    """Signed flow per edge, aligned with ``topology.edges``."""

    topology: Topology
    flow: np.ndarray

    def residuals(self, mu: np.ndarray) -> np.ndarray:
        # net outflow at each node minus its supply
        net = np.zeros(self.topology.n_nodes)
        for (u, v), f in zip(self.topology.edges, self.flow):
            net[u] += f
            net[v] -= f
        supply = np.zeros(self.topology.n_nodes)
        supply[: len(mu)] = mu
        return net - supply


def _bfs_order(adj: list[list[int]], root: int) -> tuple[list[int], list[int]]:
    parent = [-1] * len(adj)
    seen = [False] * len(adj)
    seen[root] = True
    order = []
    queue = deque([root])
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in sorted(adj[u]):
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                queue.append(v)
    return order, parent


def compute_edge_flows(topology: Topology, problem: BotProblem | np.ndarray) -> FlowAssignment:
    """Unique flows satisfying conservation, by leaf elimination from the root outward."""
    mu = problem.mu if isinstance(problem, BotProblem) else np.asarray(problem, dtype=float)
    if len(mu) != topology.n_terminals:
        raise InvalidTopologyError(f"topology has {topology.n_terminals} terminals, problem has {len(mu)}")
    topology.check()
    adj = topology.adjacency()
    order, parent = _bfs_order(adj, 0)
    subtree = np.zeros(topology.n_nodes)
    subtree[: len(mu)] = mu
    for v in reversed(order[1:]):
        subtree[parent[v]] += subtree[v]
    flow = np.empty(len(topology.edges))
    for k, (u, v) in enumerate(topology.edges):
        if parent[u] == v:  # mass leaving u's subtree flows u -> v
            flow[k] = subtree[u]
        else:
            flow[k] = -subtree[v]
    return FlowAssignment(topology, flow)


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def enumerate_full_topologies(n: int) -> Iterator[Topology]:
    """Yield every full tree topology on n labeled terminals exactly once ((2n-5)!! in total).

    Terminal k is inserted by splitting one of the existing 2k-3 edges with a new BP.
    """
    if n < 3:
        raise ValueError(f"full topologies need n >= 3 terminals, got {n}")
    start = [(0, n), (1, n), (2, n)]

    def insert(edges: list[tuple[int, int]], k: int):
        if k == n:
            yield Topology(n, n - 2, tuple(edges))
            return
        bp = n + k - 2
        for i, (u, v) in enumerate(edges):
            new = edges[:i] + [(u, bp), (bp, v)] + edges[i + 1 :] + [(k, bp)]
            yield from insert(new, k + 1)

    yield from insert(start, 3)


def star_topology(problem: BotProblem | int) -> Topology:
    n = problem if isinstance(problem, int) else problem.n
    return Topology(n, 1, tuple((i, n) for i in range(n)))


def mst_topology(problem: BotProblem) -> Topology:
    """Euclidean minimum spanning tree over the terminals (Kruskal, ties by edge index)."""
    x = problem.coords
    n = problem.n
    cand = []
    for i in range(n):
        d = np.linalg.norm(x[i + 1 :] - x[i], axis=1)
        cand.extend((float(dist), i, j) for j, dist in zip(range(i + 1, n), d))
    cand.sort()
    root = list(range(n))

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    edges = []
    for _, i, j in cand:
        ri, rj = find(i), find(j)
        if ri != rj:
            root[ri] = rj
            edges.append((i, j))
            if len(edges) == n - 1:
                break
    return Topology(n, 0, tuple(edges))


def canonical_form(topology: Topology) -> frozenset:
    """Label-free (w.r.t. BP ids) form: the set of terminal splits induced by the edges."""
    n = topology.n_terminals
    adj = topology.adjacency()
    order, parent = _bfs_order(adj, 0)
    below: list[frozenset] = [frozenset()] * topology.n_nodes
    for v in reversed(order):
        own = frozenset([v]) if v < n else frozenset()
        below[v] = own.union(*(below[c] for c in adj[v] if parent[c] == v))
    return frozenset(below[v] for v in order[1:])


@dataclass(frozen=True)
class BpCluster:
    bps: tuple[int, ...]
    effective_neighbors: tuple[int, ...]
    coincident_terminal: int | None

    @property
    def effective_degree(self) -> int:
        return len(self.effective_neighbors)


def detect_coupled_bps(topology: Topology, coords: np.ndarray, cluster_tol: float = 1e-4) -> list[BpCluster]:
    """Single-linkage clusters of BPs whose positions lie within cluster_tol.

    ``coords`` holds positions of all nodes (terminals first, then BPs).
    """
    n, m = topology.n_terminals, topology.n_bps
    coords = np.asarray(coords, dtype=float)
    bp_x = coords[n : n + m]
    root = list(range(m))

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    for i in range(m):
        d = np.linalg.norm(bp_x[i + 1 :] - bp_x[i], axis=1)
        for j in np.nonzero(d <= cluster_tol)[0]:
            ri, rj = find(i), find(i + 1 + int(j))
            if ri != rj:
                root[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    adj = topology.adjacency()
    out = []
    for members in sorted(groups.values()):
        ids = {n + i for i in members}
        nbrs = sorted({v for b in ids for v in adj[b] if v not in ids})
        coincident = None
        for t in range(n):
            if np.min(np.linalg.norm(bp_x[members] - coords[t], axis=1)) <= cluster_tol:
                coincident = t
                break
        out.append(BpCluster(tuple(sorted(ids)), tuple(nbrs), coincident))
    return out
