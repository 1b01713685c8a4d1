"""Acceptance suite: one test per criterion, measured values attached to the report."""

import math
import time

import numpy as np
import pytest

from branchedot.angles import asymmetric_angles, f_angle, h_angle
from branchedot.construction import construct_ros_exhaustive
from branchedot.experiments import CompareConfig, run_compare
from branchedot.inequality import verify_region
from branchedot.irls import SolverConfig, bot_cost, bp_gradient, optimize_branching_points, random_bp_init
from branchedot.problem import BotProblem, generate_random_problem
from branchedot.search import brute_force
from branchedot.topology import Topology, compute_edge_flows, enumerate_full_topologies

TIGHT = SolverConfig(eta=1e-12, max_iters=50000, clip=1e-10)


@pytest.fixture
def report(record_property):
    def _report(num, detail):
        record_property("criterion", num)
        record_property("detail", detail)
    return _report


def _random_case(rng, n_lo, n_hi, dim=2):
    n = int(rng.integers(n_lo, n_hi + 1))
    p = generate_random_problem(n, int(rng.integers(1 << 31)), dim)
    topos = list(enumerate_full_topologies(n))
    return p, topos[int(rng.integers(len(topos)))]


def _deflection(parent, bp, child):
    u, v = bp - parent, child - bp
    return math.acos(np.clip(u @ v / np.linalg.norm(u) / np.linalg.norm(v), -1, 1))


def test_c01_heuristic_quality(report):
    t0 = time.perf_counter()
    res = run_compare(CompareConfig(n_list=(5, 6, 7), problems_per_n=30, seed=0))
    wall = time.perf_counter() - t0
    ratios = np.array([r["ratio"] for r in res.rows])
    mean, median = float(ratios.mean()), float(np.median(ratios))
    report(1, f"mean={mean:.5f} median={median:.6f} max={ratios.max():.4f} min={ratios.min():.10f} "
              f"wall={wall:.0f}s")
    assert len(ratios) == 90
    assert mean <= 1.01 and median <= 1.002
    assert wall <= 15 * 60


def test_c02_iteration_count(report):
    res = run_compare(CompareConfig(n_list=(9,), problems_per_n=30, seed=0, with_brute_force=False))
    its = np.array([r["iterations_tried"] for r in res.rows])
    report(2, f"mean={its.mean():.1f} std={its.std():.1f} (accepted mean "
              f"{np.mean([r['iterations_accepted'] for r in res.rows]):.1f})")
    assert 15 <= its.mean() <= 50


def test_c03_enumeration(report):
    t0 = time.perf_counter()
    counts = [sum(1 for _ in enumerate_full_topologies(n)) for n in range(3, 9)]
    wall = time.perf_counter() - t0
    report(3, f"counts={counts} wall={wall:.2f}s")
    assert counts == [1, 3, 15, 105, 945, 10395]
    assert wall < 1.0


def test_c04_monotone_descent(report):
    rng = np.random.default_rng(4)
    worst = -math.inf
    for i in range(200):
        p, topo = _random_case(rng, 3, 9, dim=(2, 3, 5)[i % 3])
        res = optimize_branching_points(topo, p, init=rng)
        tr = np.array(res.cost_trace)
        worst = max(worst, float(np.max((tr[1:] - tr[:-1]) / tr[:-1])))
    report(4, f"max relative increase={worst:.3g} over 200 runs")
    assert worst <= 1e-12


def test_c05_stationarity_and_angles(report):
    rng = np.random.default_rng(5)
    fd_err = grad = ang_err = 0.0
    checked = 0
    for _ in range(100):
        p, topo = _random_case(rng, 3, 7)
        res = optimize_branching_points(topo, p, init=rng, config=TIGHT)
        assert res.converged
        x = np.vstack([p.coords, res.bp_coords])
        flows = compute_edge_flows(topo, p).flow
        g, _ = bp_gradient(topo, x, flows, p.alpha)
        for b in range(p.n, p.n + topo.n_bps):
            inc = [(k, e) for k, e in enumerate(topo.edges) if b in e]
            if min(np.linalg.norm(x[u] - x[v]) for _, (u, v) in inc) < 1e-3:
                continue  # degenerate: BP coupled to a neighbour
            checked += 1
            grad = max(grad, float(np.linalg.norm(g[b - p.n])))
            h = 1e-6
            for j in range(2):
                xp, xm = x.copy(), x.copy()
                xp[b, j] += h
                xm[b, j] -= h
                fd = (bot_cost(topo, xp, flows, p.alpha) - bot_cost(topo, xm, flows, p.alpha)) / (2 * h)
                fd_err = max(fd_err, abs(fd - g[b - p.n, j]))
            nbr = [v if u == b else u for _, (u, v) in inc]
            inflow = np.array([flows[k] if v == b else -flows[k] for k, (u, v) in inc])
            sg = np.sign(inflow)
            odd = next(i for i in range(3) if np.sum(sg == sg[i]) == 1)
            pa, pb = [i for i in range(3) if i != odd]
            M = abs(inflow[odd])
            # symmetric view: the odd edge is the parent
            for i in (pa, pb):
                ang_err = max(ang_err, abs(_deflection(x[nbr[odd]], x[b], x[nbr[i]])
                                           - f_angle(p.alpha, abs(inflow[i]) / M)))
            # asymmetric view: one of the pair is the parent
            a = asymmetric_angles(p.alpha, abs(inflow[pb]), M)
            ang_err = max(ang_err, abs(_deflection(x[nbr[pa]], x[b], x[nbr[pb]]) - a.vartheta1),
                          abs(_deflection(x[nbr[pa]], x[b], x[nbr[odd]]) - a.vartheta2))
    report(5, f"non-degenerate BPs={checked} fd_err={fd_err:.2g} grad={grad:.2g} angle_err={ang_err:.2g} rad")
    assert checked >= 30
    assert fd_err < 1e-5 and grad < 1e-4 and ang_err < 1e-3


def test_c06_closed_form_constants(report):
    worst = 0.0
    for k in (0.01, 0.5, 0.99):
        for val, ref in ((f_angle(0, k), math.pi / 3), (h_angle(0, k), 2 * math.pi / 3), (f_angle(1, k), 0.0),
                         (h_angle(1, k), 0.0), (h_angle(0.5, k), math.pi / 2)):
            worst = max(worst, abs(val - ref))
    report(6, f"max error={worst:.2g}")
    assert worst <= 1e-12


def test_c07_construction_vs_irls(report):
    rng = np.random.default_rng(7)
    success, worst = 0, 0.0
    for _ in range(50):
        p, topo = _random_case(rng, 3, 6)
        res = construct_ros_exhaustive(topo, p)
        if res.success:
            success += 1
            ref = optimize_branching_points(topo, p, init=0, config=TIGHT)
            worst = max(worst, abs(res.cost - ref.cost) / ref.cost)
    report(7, f"success rate={success}/50 max rel diff={worst:.2g}")
    assert success > 0
    assert worst < 1e-5


def test_c08_fermat(report):
    topo = Topology(3, 1, ((0, 3), (3, 1), (3, 2)))

    def cost(alpha, config=SolverConfig()):
        p = BotProblem.from_arrays([[0, 0], [1, 1], [1, -1]], [1.0, -0.5, -0.5], alpha)
        return optimize_branching_points(topo, p, init=0, config=config).cost

    e0 = abs(cost(0.0) - (1 + math.sqrt(3)))
    e1 = abs(cost(1.0, TIGHT) - math.sqrt(2))
    report(8, f"alpha=0 err={e0:.2g} alpha=1 err={e1:.2g}")
    assert e0 < 1e-5 and e1 < 1e-6


def test_c09_inequality_certification(report):
    coarse = verify_region(1e-2, 1e-2, 1e-4)
    fine = verify_region(1e-3, 1e-3, 1e-4)
    report(9, f"1e-2: {coarse.all_positive} {coarse.cuboids_processed} cuboids {coarse.wall_time:.1f}s; "
              f"1e-3: {fine.all_positive} {fine.cuboids_processed} cuboids {fine.wall_time:.0f}s "
              f"min_lb={fine.min_lower_bound:.3g}")
    assert coarse.all_positive and coarse.wall_time <= 5 * 60
    assert fine.all_positive and fine.wall_time <= 60 * 60
    assert fine.min_lower_bound > 1e-4


def _clusters(points, tol):
    parent = list(range(len(points)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if np.linalg.norm(points[i] - points[j]) < tol:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(points)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def test_c10_degree_three_optima(report):
    tol = 1e-4
    bad = 0
    for seed in range(50):
        p = generate_random_problem(5, 1000 + seed)
        sol = brute_force(p, seed=seed)
        x = sol.coords
        for cl in _clusters(sol.bp_coords, tol):
            nodes = {p.n + i for i in cl}
            if np.linalg.norm(p.coords - x[min(nodes)], axis=1).min() < tol:
                continue  # coincides with a terminal
            deg = sum(1 for u, v in sol.topology.edges if (u in nodes) != (v in nodes))
            bad += deg > 3
    report(10, f"clusters of effective degree > 3 away from terminals: {bad} in 50 problems")
    assert bad == 0


def test_c11_scale_invariance(report):
    rng = np.random.default_rng(11)
    worst_x = worst_m = 0.0
    for _ in range(20):
        p, topo = _random_case(rng, 3, 8, dim=int(rng.choice([2, 3])))
        init = random_bp_init(p, topo.n_bps, rng)
        base = optimize_branching_points(topo, p, init=init)
        for c in (0.25, 8.0):
            q = BotProblem.from_arrays(p.coords * c, p.mu, p.alpha)
            cfg = SolverConfig(clip=1e-7 * c)
            res = optimize_branching_points(topo, q, init=init * c, config=cfg)
            worst_x = max(worst_x, abs(res.cost - c * base.cost) / (c * base.cost))
        x = np.vstack([p.coords, base.bp_coords])
        flows = compute_edge_flows(topo, p).flow
        for c in (0.3, 7.0):
            q = BotProblem.from_arrays(p.coords, p.mu * c, p.alpha)
            scaled = bot_cost(topo, x, compute_edge_flows(topo, q).flow, p.alpha)
            worst_m = max(worst_m, abs(scaled - c ** p.alpha * bot_cost(topo, x, flows, p.alpha))
                          / (c ** p.alpha * base.cost))
    report(11, f"coordinate scaling rel err={worst_x:.2g} mass scaling rel err={worst_m:.2g}")
    assert worst_x < 1e-9 and worst_m < 1e-12
