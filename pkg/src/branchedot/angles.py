"""Optimal branching angles f, h and the Y/V/L classification of a single branching."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TRANSIENT_TOL = 1e-9


class DegenerateGeometryError(ValueError):
    pass


def _check_k(k):
    k = np.asarray(k, dtype=float)
    if np.any(~((k > 0.0) & (k < 1.0))):
        raise ValueError("flow fraction k must lie strictly inside (0, 1)")
    return k


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def f_arg(alpha, k):
    k = np.asarray(k, dtype=float)
    ka = k**alpha
    return (ka * ka + 1.0 - (1.0 - k) ** (2.0 * alpha)) / (2.0 * ka)


def h_arg(alpha, k):
    k = np.asarray(k, dtype=float)
    ka, ja = k**alpha, (1.0 - k) ** alpha
    return (1.0 - ka * ka - ja * ja) / (2.0 * ka * ja)


def _powers(alpha, k):
    ka, ja = k**alpha, (1.0 - k) ** alpha
    # k^a + (1-k)^a - 1 >= 0 by subadditivity; this is the term that cancels near alpha = 1
    s = np.maximum(ka + ja - 1.0, 0.0)
    return ka, ja, s


def f_terms(alpha, k):
    """(1 - cos f, 1 + cos f), each scaled by the same positive factor; k may be 1."""
    ka, ja, s = _powers(alpha, np.asarray(k, dtype=float))
    return s * np.maximum(1.0 + ja - ka, 0.0), np.maximum(1.0 + ka - ja, 0.0) * (1.0 + ka + ja)


def h_terms(alpha, k):
    """(1 - cos h, 1 + cos h), each scaled by the same positive factor."""
    ka, ja, s = _powers(alpha, np.asarray(k, dtype=float))
    return s * (s + 2.0), np.maximum(1.0 - ka + ja, 0.0) * np.maximum(1.0 + ka - ja, 0.0)


def angle_from_terms(one_minus, one_plus, pad: float = 0.0):
    """arccos(c) = 2 atan2(sqrt(1 - c), sqrt(1 + c)), which stays accurate where c rounds to +-1.

    ``pad`` shifts c by that amount (pad > 0 lowers the angle, pad < 0 raises it).
    """
    if pad:
        u = 2.0 * one_minus / (one_minus + one_plus)
        one_minus = np.clip(u - pad, 0.0, 2.0)
        one_plus = 2.0 - one_minus
    return 2.0 * np.arctan2(np.sqrt(one_minus), np.sqrt(one_plus))


def f_angle(alpha, k):
    """Optimal angle between the child edge with flow fraction k and the parent-edge extension."""
    k = _check_k(k)
    return _out(angle_from_terms(*f_terms(alpha, k)))


def h_angle(alpha, k):
    """Optimal total angle between the two child edges, f(alpha, k) + f(alpha, 1 - k)."""
    k = _check_k(k)
    return _out(angle_from_terms(*h_terms(alpha, k)))


class AsymmetricAngles(NamedTuple):
    vartheta1: float
    vartheta2: float
    degenerate: bool = False


def asymmetric_angles(alpha: float, m1: float, m2: float) -> AsymmetricAngles:
    """Optimal child-edge angles when one child flow enters the BP and the other leaves it.

    ``m1 < m2`` are the child flow magnitudes; the parent edge carries ``m2 - m1``.
    """
    if m1 <= 0 or m2 <= 0:
        raise ValueError("flows must be positive")
    if m1 > m2:
        raise ValueError("asymmetric branching expects m1 < m2; swap the children")
    if m1 == m2:
        # parent edge carries no flow: k -> 0 limit
        lim_f = math.pi / 3 if alpha == 0 else math.pi / 2
        lim_h = 2 * math.pi / 3 if alpha == 0 else math.pi / 2
        return AsymmetricAngles(math.pi - lim_h, lim_f, True)
    k = (m2 - m1) / m2
    return AsymmetricAngles(math.pi - h_angle(alpha, k), f_angle(alpha, k))


def angle_at(p, q, r) -> float:
    """Angle at q enclosed by q->p and q->r."""
    u = np.asarray(p, float) - np.asarray(q, float)
    v = np.asarray(r, float) - np.asarray(q, float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DegenerateGeometryError("coincident points")
    c = np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0)
    return float(np.arccos(c))


@dataclass(frozen=True)
class BranchingClass:
    kind: str  # "Y", "V", "L1", "L2"
    optimal_angles: tuple[float, float]
    transient: bool = False
    # (angle, bound) for V, L1, L2 in that order
    conditions: tuple[tuple[float, float], ...] = ()


def classify_branching(a0, a1, a2, m1: float, m2: float, alpha: float, mode: str = "symmetric") -> BranchingClass:
    """Decide between Y-, V- and L-branching for parent a0 and children a1, a2.

    mode="symmetric": both child flows point toward (or both away from) the BP,
    a0 carries m1 + m2. mode="asymmetric": one child flow in, one out, m1 < m2,
    a0 carries m2 - m1.
    """
    pts = [np.asarray(a, float) for a in (a0, a1, a2)]
    for i in range(3):
        for j in range(i + 1, 3):
            if np.array_equal(pts[i], pts[j]):
                raise DegenerateGeometryError(f"points a{i} and a{j} coincide")
    psi = angle_at(pts[1], pts[0], pts[2])  # at a0
    phi = angle_at(pts[2], pts[1], pts[0])  # at a1
    rho = angle_at(pts[0], pts[2], pts[1])  # at a2
    if mode == "symmetric":
        k = m1 / (m1 + m2)
        t1, t2 = f_angle(alpha, k), f_angle(alpha, 1.0 - k)
        conds = ((psi, t1 + t2), (phi, math.pi - t2), (rho, math.pi - t1))
        optimal = (t1, t2)
    elif mode == "asymmetric":
        ang = asymmetric_angles(alpha, m1, m2)
        if ang.degenerate:
            raise DegenerateGeometryError("equal child flows: parent edge carries no flow")
        k = (m2 - m1) / m2
        t1, t2 = f_angle(alpha, k), f_angle(alpha, 1.0 - k)
        conds = ((psi, math.pi - t2), (phi, math.pi - t1), (rho, t1 + t2))
        optimal = (ang.vartheta1, ang.vartheta2)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    holds = [a >= b - TRANSIENT_TOL for a, b in conds]
    transient = any(abs(a - b) <= TRANSIENT_TOL for a, b in conds) or sum(holds) > 1
    for kind, ok in zip(("V", "L1", "L2"), holds):
        if ok:
            return BranchingClass(kind, optimal, transient, conds)
    return BranchingClass("Y", optimal, transient, conds)
