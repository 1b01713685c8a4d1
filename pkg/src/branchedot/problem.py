"""BOT problem instances: terminals with signed masses, validation, generation, JSON I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MASS_TOL = 1e-9


class InvalidProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Terminal:
    position: tuple[float, ...]
    mu: float  # > 0 supply (source), < 0 demand (sink)

    @property
    def is_source(self) -> bool:
        return self.mu > 0


@dataclass(frozen=True)
class BotProblem:
    alpha: float
    terminals: tuple[Terminal, ...]
    dim: int = 2
    _coords: np.ndarray = field(init=False, repr=False, compare=False)
    _mu: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terminals", tuple(self.terminals))
        coords = np.array([t.position for t in self.terminals], dtype=float).reshape(len(self.terminals), -1)
        mu = np.array([t.mu for t in self.terminals], dtype=float)
        coords.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "_coords", coords)
        object.__setattr__(self, "_mu", mu)

    @classmethod
    def from_arrays(cls, coords, mu, alpha: float) -> "BotProblem":
        coords = np.asarray(coords, dtype=float)
        if coords.ndim != 2:
            raise InvalidProblemError("coords must be a 2-d array (n, dim)")
        terms = tuple(Terminal(tuple(float(c) for c in row), float(m)) for row, m in zip(coords, mu))
        return cls(alpha=float(alpha), terminals=terms, dim=coords.shape[1])

    @property
    def n(self) -> int:
        return len(self.terminals)

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def mu(self) -> np.ndarray:
        return self._mu

    def scaled(self, coord_factor: float = 1.0, mass_factor: float = 1.0) -> "BotProblem":
        return BotProblem.from_arrays(self.coords * coord_factor, self.mu * mass_factor, self.alpha)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "dim": self.dim,
            "terminals": [{"pos": list(t.position), "mu": t.mu} for t in self.terminals],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BotProblem":
        try:
            alpha = float(data["alpha"])
            dim = int(data.get("dim", 2))
            terms = [Terminal(tuple(float(x) for x in t["pos"]), float(t["mu"])) for t in data["terminals"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidProblemError(f"malformed problem data: {exc!r}") from exc
        problem = cls(alpha=alpha, terminals=tuple(terms), dim=dim)
        violations = validate(problem)
        if violations:
            raise InvalidProblemError("; ".join(violations))
        return _renormalized(problem)


def _renormalized(problem: BotProblem) -> BotProblem:
    # Inputs that balance within MASS_TOL are snapped to balance; rounding-level
    # imbalance is left alone so files round-trip bit-exactly.
    mu = problem.mu.copy()
    if abs(mu.sum()) <= 1e-14 * np.abs(mu).sum():
        return problem
    pos, neg = mu > 0, mu < 0
    total = 0.5 * (mu[pos].sum() - mu[neg].sum())
    mu[pos] *= total / mu[pos].sum()
    mu[neg] *= total / -mu[neg].sum()
    terms = tuple(Terminal(t.position, float(m)) for t, m in zip(problem.terminals, mu))
    return BotProblem(alpha=problem.alpha, terminals=terms, dim=problem.dim)


def validate(problem: BotProblem) -> list[str]:
    """Return human-readable invariant violations (empty list if valid)."""
    out = []
    if not (0.0 <= problem.alpha <= 1.0):
        out.append(f"alpha {problem.alpha} outside [0, 1]")
    if problem.dim < 2:
        out.append(f"dim {problem.dim} < 2")
    bad_len = [i for i, t in enumerate(problem.terminals) if len(t.position) != problem.dim]
    if bad_len:
        out.append(f"positions of terminals {bad_len} do not have length {problem.dim}")
    zero = [i for i, t in enumerate(problem.terminals) if t.mu == 0]
    if zero:
        out.append(f"terminals {zero} have zero mass")
    mus = [t.mu for t in problem.terminals]
    if not any(m > 0 for m in mus) or not any(m < 0 for m in mus):
        out.append("need at least one source (mu > 0) and one sink (mu < 0)")
    if abs(sum(mus)) > MASS_TOL:
        out.append(f"mass imbalance: sum of mu is {sum(mus):.3g}")
    if not bad_len:
        seen: dict[tuple, int] = {}
        for i, t in enumerate(problem.terminals):
            key = tuple(t.position)
            if key in seen:
                out.append(f"coincident terminals {seen[key]} and {i}")
            else:
                seen[key] = i
    return out


def generate_random_problem(n: int, seed: int, dim: int = 2) -> BotProblem:
    """Random problem: uniform alpha, uniform source count, unit total supply/demand, points in [0,1]^dim."""
    if n < 2:
        raise ValueError(f"need n >= 2 terminals, got {n}")
    if dim < 2:
        raise ValueError(f"need dim >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.0, 1.0)
    n_src = int(rng.integers(1, n))  # {1, ..., n-1}
    supply = rng.uniform(0.0, 1.0, size=n_src)
    demand = rng.uniform(0.0, 1.0, size=n - n_src)
    coords = rng.uniform(0.0, 1.0, size=(n, dim))
    mu = np.concatenate([supply / supply.sum(), -demand / demand.sum()])
    return BotProblem.from_arrays(coords, mu, alpha)


def load_problem(path) -> BotProblem:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidProblemError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    return BotProblem.from_dict(data)


def save_problem(problem: BotProblem, path) -> None:
    Path(path).write_text(json.dumps(problem.to_dict(), indent=1) + "\n", encoding="utf-8")
