"""Numerical certification that a coupled 4-branching (one source, three sinks) is never optimal.

The remaining parameter region alpha in (0.5, 1), m1 < 1/4, m2 in [1/2 - m1, 1 - 2 m1]
is covered by cuboids; each is bounded from below using the monotonicity of f and h
and split into eight children until every bound exceeds a safety threshold.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .angles import angle_from_terms, f_angle, f_terms, h_angle, h_terms

ARG_PAD = 1e-12
DEFAULT_THRESHOLD = 1e-4
DEFAULT_MAX_DEPTH = 40


class DomainError(ValueError):
    pass


def _check_masses(m1, m2, name="m1"):
    if not (m1 > 0 and m2 > 0 and m1 + m2 < 1):
        raise DomainError(f"masses outside the simplex: {name}={m1}, m2={m2}")


def gamma(alpha, m1, m2) -> float:
    """Angle gap of the 4-branching vs the two-BP topologies; positive rules the 4-branching out."""
    _check_masses(m1, m2)
    m3 = 1.0 - m1 - m2
    return (h_angle(alpha, m1 / (m1 + m2)) - f_angle(alpha, m1)
            + h_angle(alpha, m3 / (m3 + m2)) - f_angle(alpha, m3))


def gamma1(alpha, m_star, m2) -> float:
    _check_masses(m_star, m2, "m_star")
    return (f_angle(alpha, 1.0 - m_star) + f_angle(alpha, 1.0 - m2 / (1.0 - m_star))
            - f_angle(alpha, 1.0 - m_star - m2))


def gamma2(alpha, m_star, m2) -> float:
    _check_masses(m_star, m2, "m_star")
    return (h_angle(alpha, m_star / (m_star + m2)) + f_angle(alpha, m2 / (1.0 - m_star))
            - h_angle(alpha, m_star))


@dataclass(frozen=True)
class Cuboid:
    alpha_lo: float
    alpha_hi: float
    m1_lo: float
    m1_hi: float
    m2_lo: float
    m2_hi: float

    def __post_init__(self):
        if not (self.alpha_lo <= self.alpha_hi and self.m1_lo <= self.m1_hi and self.m2_lo <= self.m2_hi):
            raise ValueError("cuboid bounds must satisfy lo <= hi")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha_lo, self.alpha_hi, self.m1_lo, self.m1_hi, self.m2_lo, self.m2_hi])

    @classmethod
    def from_array(cls, a) -> "Cuboid":
        return cls(*(float(v) for v in a))

    def in_region(self) -> bool:
        """Inside the box where the bound is valid, and meeting the m2 band."""
        a = self.as_array()[None]
        return bool(_box_ok(a)[0] and _meets_band(a)[0])


def _meets_band(c: np.ndarray) -> np.ndarray:
    # keep unless fully above m2 = 1 - 2 m1 or fully below m2 = 1/2 - m1
    return ~((c[:, 4] > 1.0 - 2.0 * c[:, 2]) | (c[:, 5] < 0.5 - c[:, 3]))


def _box_ok(c: np.ndarray) -> np.ndarray:
    return ((c[:, 0] >= 0.5) & (c[:, 1] < 1.0) & (c[:, 2] > 0) & (c[:, 3] <= 0.25)
            & (c[:, 4] >= 0.25) & (c[:, 5] < 1.0))


def _lower_bounds(c: np.ndarray, pad: float = ARG_PAD) -> np.ndarray:
    """Vectorized lower bound of gamma2 at * = 1 over rows (a_lo, a_hi, m1_lo, m1_hi, m2_lo, m2_hi).

    Each cosine is widened by ``pad`` in the conservative direction before taking the angle.
    """
    a_lo, a_hi, m1_lo, m1_hi, m2_lo, m2_hi = c.T
    with np.errstate(divide="ignore", invalid="ignore"):
        k1 = m1_hi / (m1_hi + m2_lo)  # h decreasing in k on (0, 1/2] and in alpha
        k2 = np.minimum(m2_hi / (1.0 - m1_hi), 1.0)  # f decreasing in k and alpha
        t1 = angle_from_terms(*h_terms(a_hi, k1), pad)
        t2 = angle_from_terms(*f_terms(a_hi, k2), pad)
        t3 = angle_from_terms(*h_terms(a_lo, m1_lo), -pad)
    return t1 + t2 - t3


def lower_bound_gamma2(cuboid: Cuboid, pad: float = ARG_PAD) -> float:
    """Lower bound of gamma2(alpha, m1, m2) over the cuboid, valid inside the remaining region."""
    if not cuboid.in_region():
        raise DomainError(f"cuboid outside the remaining region: {cuboid}")
    return float(_lower_bounds(cuboid.as_array()[None], pad)[0])


def _split(c: np.ndarray) -> np.ndarray:
    """Octree split of every row into 8 children."""
    mid = 0.5 * (c[:, 0::2] + c[:, 1::2])  # (N, 3)
    out = np.empty((len(c), 8, 6))
    for idx in range(8):
        for ax in range(3):
            upper = (idx >> ax) & 1
            lo, hi = c[:, 2 * ax], c[:, 2 * ax + 1]
            out[:, idx, 2 * ax] = mid[:, ax] if upper else lo
            out[:, idx, 2 * ax + 1] = hi if upper else mid[:, ax]
    return out.reshape(-1, 6)


def _point_in_region(alpha, m1, m2):
    return (alpha >= 0.5) & (alpha < 1) & (0 < m1) & (m1 <= 0.25) & (m2 >= 0.5 - m1) & (m2 <= 1 - 2 * m1)


@dataclass
class VerificationReport:
    all_positive: bool
    cuboids_processed: int
    max_depth: int
    min_lower_bound: float
    eps: float
    delta: float
    threshold: float
    failing_cuboid: list | None = None
    failing_value: float | None = None
    reason: str = ""
    cuboids_per_level: list = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(d["min_lower_bound"]):
            d["min_lower_bound"] = None
        return d


def initial_cuboids(eps: float, delta: float, grid=(1, 1, 1)) -> np.ndarray:
    """Tile [0.5, 1-eps] x [delta, 0.25] x [0.25, 1-2 delta], dropping cells that miss the m2 band."""
    edges = [np.linspace(lo, hi, g + 1) for (lo, hi), g in
             zip(((0.5, 1.0 - eps), (delta, 0.25), (0.25, 1.0 - 2.0 * delta)), grid)]
    cells = [
        (edges[0][i], edges[0][i + 1], edges[1][j], edges[1][j + 1], edges[2][k], edges[2][k + 1])
        for i in range(grid[0]) for j in range(grid[1]) for k in range(grid[2])
    ]
    c = np.array(cells, dtype=float)
    return c[_meets_band(c)]


def verify_region(eps: float = 1e-3, delta: float = 1e-3, threshold: float = DEFAULT_THRESHOLD,
                  max_depth: int = DEFAULT_MAX_DEPTH, grid=(1, 1, 1), pad: float = ARG_PAD,
                  chunk: int = 1 << 18) -> VerificationReport:
    """Certify gamma2 > threshold on the remaining region restricted to m1 > delta, alpha < 1 - eps.

    Deterministic octree refinement, processed depth-first in vectorized batches of at
    most ``chunk`` cuboids so memory stays bounded. Stops early with a failure when a
    cuboid center itself violates the threshold (no refinement could succeed).
    """
    if not (eps > 0 and delta > 0 and threshold > 0):
        raise ValueError("eps, delta and threshold must be positive")
    if not (eps < 0.5 and delta < 0.25):
        raise ValueError("eps must be < 0.5 and delta < 0.25")
    t0 = time.perf_counter()
    processed = 0
    min_lb = math.inf
    per_level: list[int] = []
    deepest = 0
    stack = [(initial_cuboids(eps, delta, grid), 0)]

    def fail(cuboid, value, reason):
        return VerificationReport(False, processed, deepest, min_lb, eps, delta, threshold,
                                  cuboid.tolist(), float(value), reason, per_level, time.perf_counter() - t0)

    while stack:
        c, depth = stack.pop()
        if len(c) > chunk:
            pieces = [c[i:i + chunk] for i in range(0, len(c), chunk)]
            stack.extend((piece, depth) for piece in reversed(pieces))
            continue
        if depth == len(per_level):
            per_level.append(0)
        per_level[depth] += len(c)
        deepest = max(deepest, depth)
        processed += len(c)
        lb = _lower_bounds(c, pad)
        ok = lb > threshold
        if ok.any():
            min_lb = min(min_lb, float(lb[ok].min()))
        bad = c[~ok]
        if not len(bad):
            continue
        # a center value at or below the threshold cannot be refined away
        ca, cm1, cm2 = (0.5 * (bad[:, 2 * i] + bad[:, 2 * i + 1]) for i in range(3))
        inside = _point_in_region(ca, cm1, cm2)
        if inside.any():
            vals = _gamma2_vec(ca[inside], cm1[inside], cm2[inside])
            hit = np.nonzero(vals <= threshold)[0]
            if len(hit):
                i = int(np.nonzero(inside)[0][hit[0]])
                return fail(bad[i], vals[hit[0]], "gamma2 at a cuboid center is below the threshold")
        if depth >= max_depth:
            return fail(bad[0], _lower_bounds(bad[:1], pad)[0], "max_depth reached")
        children = _split(bad)
        stack.append((children[_meets_band(children)], depth + 1))
    return VerificationReport(True, processed, deepest, min_lb, eps, delta, threshold,
                              cuboids_per_level=per_level, wall_time=time.perf_counter() - t0)


def _gamma2_vec(alpha, m1, m2):
    return (angle_from_terms(*h_terms(alpha, m1 / (m1 + m2))) + angle_from_terms(*f_terms(alpha, m2 / (1.0 - m1)))
            - angle_from_terms(*h_terms(alpha, m1)))


@dataclass
class AuditReport:
    passed: bool
    checks: dict

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": self.checks}


def monotonicity_audit(grid_resolution: int = 200) -> AuditReport:
    """Grid-check the monotonicity facts about f and h that the lower bound relies on.

    - f strictly decreasing in k on (0, 1) for every alpha in (0, 1)
    - f non-increasing in alpha on [1/2, 1), h on (0, 1), for fixed k
    - for alpha > 1/2, h decreasing in k on (0, 1/2] (minimum at k = 1/2);
      for alpha < 1/2, h increasing there (maximum at k = 1/2)
    - h symmetric under k -> 1 - k
    """
    g = int(grid_resolution)
    if g < 3:
        raise ValueError("grid_resolution must be >= 3")
    k = np.linspace(0.0, 1.0, g + 2)[1:-1]
    alphas = np.linspace(0.0, 1.0, g + 2)[1:-1]
    A, K = np.meshgrid(alphas, k, indexing="ij")
    F = f_angle(A, K)
    H = h_angle(A, K)
    tol = 1e-12
    checks = {}
    checks["f_decreasing_in_k"] = int(np.sum(np.diff(F, axis=1) > tol))
    upper = alphas >= 0.5
    checks["f_nonincreasing_in_alpha_above_half"] = int(np.sum(np.diff(F[upper], axis=0) > tol))
    checks["h_nonincreasing_in_alpha"] = int(np.sum(np.diff(H, axis=0) > tol))
    half = K[0] <= 0.5
    Hh = H[:, half]
    dk = np.diff(Hh, axis=1)
    hi_alpha = alphas > 0.5 + tol
    lo_alpha = alphas < 0.5 - tol
    checks["h_decreasing_in_k_below_half_for_alpha_gt_half"] = int(np.sum(dk[hi_alpha] > tol))
    checks["h_increasing_in_k_below_half_for_alpha_lt_half"] = int(np.sum(dk[lo_alpha] < -tol))
    Hs = h_angle(A, 1.0 - K)
    checks["h_symmetric"] = int(np.sum(np.abs(Hs - H) > 1e-9))
    checks["points"] = int(A.size)
    passed = all(v == 0 for key, v in checks.items() if key != "points")
    return AuditReport(passed, checks)
