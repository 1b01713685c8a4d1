"""Exact 2D construction of the relatively optimal BP geometry of a full topology via pivot circles.

Bottom-up, the two children of every BP are replaced by a pivot point: the
apex of the triangle over the children whose base angles are the optimal
child-edge angles. Top-down, every BP is the second intersection of the
segment (parent, pivot) with the circle through children and pivot.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .angles import BranchingClass, asymmetric_angles, classify_branching, f_angle
from .irls import bot_cost
from .problem import BotProblem
from .topology import Topology, _bfs_order, compute_edge_flows

EXHAUSTIVE_CAP = 12
GEOM_TOL = 1e-12


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


@dataclass
class PivotRecord:
    bp: int
    pivot: np.ndarray
    center: np.ndarray
    radius: float
    side: int  # +1: pivot left of the directed chord child0 -> child1
    child_pair: tuple[int, int]
    chord: tuple[np.ndarray, np.ndarray]  # positions standing in for the children
    child_angles: tuple[float, float]  # optimal angle of each child edge to the parent-edge extension
    mode: str

    def central_angle(self) -> float:
        """Central angle of the arc a1 -> pivot -> a2 (the arc not seen by the BP)."""
        a1, a2 = self.chord
        o = self.center

        def ccw(u, v):
            return (math.atan2(_cross(u, v), float(np.dot(u, v)))) % (2 * math.pi)

        u1, up, u2 = a1 - o, self.pivot - o, a2 - o
        total = ccw(u1, up) + ccw(up, u2)
        if total < 2 * math.pi:
            return total
        return ccw(up, u1) + ccw(u2, up)

    def to_dict(self) -> dict:
        return {
            "bp": self.bp,
            "pivot": self.pivot.tolist(),
            "center": self.center.tolist(),
            "radius": self.radius,
            "side": self.side,
            "child_pair": list(self.child_pair),
            "child_angles": list(self.child_angles),
            "mode": self.mode,
        }


@dataclass
class ConstructionResult:
    success: bool
    bp_coords: np.ndarray | None
    classes: list[str]
    side_choices: tuple[int, ...]
    pivots: list[PivotRecord] = field(default_factory=list)
    cost: float = math.inf
    failure: str = ""
    transient: bool = False
    attempts: int = 1
    successes: int = 0

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "bp_coords": None if self.bp_coords is None else self.bp_coords.tolist(),
            "classes": self.classes,
            "side_choices": list(self.side_choices),
            "pivots": [p.to_dict() for p in self.pivots],
            "cost": self.cost if self.success else None,
            "failure": self.failure,
        }


def pivot_point(p1, p2, angle1: float, angle2: float, side: int):
    """Apex of the triangle on base p1-p2 with angle2 at p1 and angle1 at p2.

    ``angle1``/``angle2`` are the optimal angles of the edges toward p1/p2
    relative to the parent-edge extension. Returns (pivot, center, radius)
    or None when the triangle does not exist.
    """
    p1, p2 = np.asarray(p1, float), np.asarray(p2, float)
    base = p2 - p1
    L = float(np.linalg.norm(base))
    s = angle1 + angle2
    if L == 0 or angle1 <= 0 or angle2 <= 0 or s >= math.pi:
        return None
    e = base / L
    nrm = side * np.array([-e[1], e[0]])
    r1 = L * math.sin(angle1) / math.sin(s)
    pivot = p1 + r1 * (math.cos(angle2) * e + math.sin(angle2) * nrm)
    radius = L / (2.0 * math.sin(s))
    # center on the bisector, on the pivot side iff the pivot-side arc is the major one
    offset = L / 2.0 / math.tan(s)  # signed distance of center from chord, toward the BP side
    center = (p1 + p2) / 2.0 - offset * nrm
    return pivot, center, radius


def _arc_point(parent, pivot, center, radius, chord, side):
    """Second intersection of segment parent->pivot with the circle, on the non-pivot arc.

    Returns (point, t, ok) with t the segment parameter of the point.
    """
    D = pivot - parent
    dd = float(np.dot(D, D))
    if dd == 0:
        return parent.copy(), 0.0, False
    t = (float(np.dot(parent - center, parent - center)) - radius * radius) / dd
    point = parent + t * D
    a1, a2 = chord
    chord_vec = a2 - a1
    ok = GEOM_TOL < t < 1.0 - GEOM_TOL and side * _cross(chord_vec, point - a1) < 0
    return point, t, ok


def optimal_bp_single(a0, a1, a2, m1: float, m2: float, alpha: float, mode: str = "symmetric"):
    """Optimal BP for parent a0 and children a1, a2 (2D); returns (position, BranchingClass)."""
    a0, a1, a2 = (np.asarray(a, float) for a in (a0, a1, a2))
    cls = classify_branching(a0, a1, a2, m1, m2, alpha, mode)
    if cls.kind == "V":
        return a0.copy(), cls
    if cls.kind == "L1":
        return a1.copy(), cls
    if cls.kind == "L2":
        return a2.copy(), cls
    t1, t2 = cls.optimal_angles
    side = -1 if _cross(a2 - a1, a0 - a1) > 0 else 1  # pivot opposite to a0
    piv = pivot_point(a1, a2, t1, t2, side)
    if piv is None:
        return a0.copy(), BranchingClass("V", cls.optimal_angles, True, cls.conditions)
    pivot, center, radius = piv
    point, t, ok = _arc_point(a0, pivot, center, radius, (a1, a2), side)
    if not ok:
        # numerically tangent: nearest admissible point
        t = min(max(t, 0.0), 1.0)
        point = a0 + t * (pivot - a0)
        cls = BranchingClass("Y", cls.optimal_angles, True, cls.conditions)
    return point, cls


def _child_angles(alpha, inflow1: float, inflow2: float):
    """Optimal child-edge angles and mode from the signed inflows (toward the BP) of both children."""
    m1, m2 = abs(inflow1), abs(inflow2)
    if m1 == 0 or m2 == 0:
        return None
    if (inflow1 > 0) == (inflow2 > 0):
        k = m1 / (m1 + m2)
        return (f_angle(alpha, k), f_angle(alpha, 1.0 - k)), "symmetric"
    if m1 == m2:
        return None
    if m1 < m2:
        ang = asymmetric_angles(alpha, m1, m2)
        return (ang.vartheta1, ang.vartheta2), "asymmetric"
    ang = asymmetric_angles(alpha, m2, m1)
    return (ang.vartheta2, ang.vartheta1), "asymmetric"


def construct_ros(topology: Topology, problem: BotProblem, root: int = 0, side_choices=None) -> ConstructionResult:
    """Relatively optimal geometry of a full topology for one choice of pivot sides.

    ``side_choices[i]`` (+1/-1) selects the pivot half-plane of BP n + i.
    """
    n, m = topology.n_terminals, topology.n_bps
    if problem.dim != 2:
        raise ValueError("geometric construction is 2D only")
    if not topology.is_full():
        raise ValueError("geometric construction needs a full tree topology")
    if not 0 <= root < n:
        raise ValueError(f"root must be a terminal id, got {root}")
    sides = tuple(side_choices) if side_choices is not None else (1,) * m
    if len(sides) != m or any(s not in (1, -1) for s in sides):
        raise ValueError(f"need {m} side choices in {{+1, -1}}")
    flows = compute_edge_flows(topology, problem)
    x = problem.coords
    alpha = problem.alpha
    adj = topology.adjacency()
    order, parent = _bfs_order(adj, root)
    depth = {root: 0}
    for v in order[1:]:
        depth[v] = depth[parent[v]] + 1
    ranked = sorted(order, key=lambda v: (depth[v], v))

    def inflow(b, c):  # signed flow on edge {b, c} toward b
        for k, (u, v) in enumerate(topology.edges):
            if (u, v) == (c, b):
                return flows.flow[k]
            if (u, v) == (b, c):
                return -flows.flow[k]
        raise KeyError((b, c))

    if n == 3:
        b = n
        c1, c2 = sorted(v for v in adj[b] if v != root)
        i1, i2 = inflow(b, c1), inflow(b, c2)
        if (i1 > 0) == (i2 > 0):
            pos, cls = optimal_bp_single(x[root], x[c1], x[c2], abs(i1), abs(i2), alpha, "symmetric")
        else:
            (lo, mlo), (hi, mhi) = sorted([(c1, abs(i1)), (c2, abs(i2))], key=lambda t: t[1])
            if mlo == mhi:
                return ConstructionResult(False, None, [], sides, failure="equal opposing child flows")
            pos, cls = optimal_bp_single(x[root], x[lo], x[hi], mlo, mhi, alpha, "asymmetric")
        bp = pos.reshape(1, 2)
        return ConstructionResult(True, bp, [cls.kind], sides, cost=_cost(topology, problem, bp, flows),
                                  transient=cls.transient)

    virtual: dict[int, np.ndarray] = {v: x[v] for v in range(n)}
    records: dict[int, PivotRecord] = {}
    for b in reversed(ranked):
        if b < n:
            continue
        c1, c2 = sorted(v for v in adj[b] if v != parent[b])
        chosen = _child_angles(alpha, inflow(b, c1), inflow(b, c2))
        if chosen is None:
            return ConstructionResult(False, None, [], sides, list(records.values()),
                                      failure=f"BP {b}: zero or balanced opposing child flow")
        (t1, t2), mode = chosen
        side = sides[b - n]
        piv = pivot_point(virtual[c1], virtual[c2], t1, t2, side)
        if piv is None:
            return ConstructionResult(False, None, [], sides, list(records.values()),
                                      failure=f"BP {b}: pivot triangle does not exist")
        pivot, center, radius = piv
        records[b] = PivotRecord(b, pivot, center, radius, side, (c1, c2), (virtual[c1], virtual[c2]),
                                 (t1, t2), mode)
        virtual[b] = pivot

    pos: dict[int, np.ndarray] = {v: x[v] for v in range(n)}
    for b in ranked:
        if b < n:
            continue
        rec = records[b]
        point, t, ok = _arc_point(pos[parent[b]], rec.pivot, rec.center, rec.radius, rec.chord, rec.side)
        if not ok:
            return ConstructionResult(False, None, [], sides, list(records.values()),
                                      failure=f"BP {b}: segment misses the pivot arc (t={t:.3g})")
        pos[b] = point
    bp = np.array([pos[n + i] for i in range(m)])
    pivots = [records[n + i] for i in range(m)]
    return ConstructionResult(True, bp, ["Y"] * m, sides, pivots, cost=_cost(topology, problem, bp, flows))


def _cost(topology, problem, bp, flows) -> float:
    return bot_cost(topology, np.vstack([problem.coords, bp]), flows, problem.alpha)


def construct_ros_exhaustive(topology: Topology, problem: BotProblem, root: int = 0,
                             cap: int = EXHAUSTIVE_CAP) -> ConstructionResult:
    """Try all 2^(n-2) pivot side combinations and keep the cheapest successful construction."""
    n = topology.n_terminals
    if n > cap:
        raise ValueError(f"exhaustive construction capped at n={cap}, got n={n}")
    best = None
    attempts = successes = 0
    last = None
    for sides in itertools.product((1, -1), repeat=topology.n_bps):
        attempts += 1
        res = construct_ros(topology, problem, root, sides)
        last = res
        if res.success:
            successes += 1
            if best is None or res.cost < best.cost:
                best = res
    out = best if best is not None else last
    out.attempts, out.successes = attempts, successes
    return out
