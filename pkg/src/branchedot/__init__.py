"""Branched optimal transport: geometry optimization, topology search and 4-branching certification."""

from .angles import asymmetric_angles, classify_branching, f_angle, h_angle
from .construction import construct_ros, construct_ros_exhaustive, optimal_bp_single
from .inequality import gamma, gamma1, gamma2, lower_bound_gamma2, monotonicity_audit, verify_region
from .irls import SolverConfig, bot_cost, optimize_branching_points
from .problem import BotProblem, Terminal, generate_random_problem, load_problem, save_problem, validate
from .search import HeuristicConfig, Solution, brute_force, greedy_heuristic
from .topology import Topology, compute_edge_flows, enumerate_full_topologies

__all__ = [
    "BotProblem", "Terminal", "generate_random_problem", "load_problem", "save_problem", "validate",
    "Topology", "compute_edge_flows", "enumerate_full_topologies",
    "f_angle", "h_angle", "asymmetric_angles", "classify_branching",
    "SolverConfig", "bot_cost", "optimize_branching_points",
    "construct_ros", "construct_ros_exhaustive", "optimal_bp_single",
    "HeuristicConfig", "Solution", "brute_force", "greedy_heuristic",
    "gamma", "gamma1", "gamma2", "lower_bound_gamma2", "verify_region", "monotonicity_audit",
]
