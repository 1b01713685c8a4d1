import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from branchedot.problem import (BotProblem, InvalidProblemError, Terminal, generate_random_problem, load_problem,
                                save_problem, validate)


def test_two_terminals_have_unit_masses():
    p = generate_random_problem(2, seed=3)
    assert sorted(p.mu.tolist()) == [-1.0, 1.0]


@given(st.integers(2, 30), st.integers(0, 2**31 - 1), st.integers(2, 5))
def test_generated_masses_normalized_and_valid(n, seed, dim):
    p = generate_random_problem(n, seed, dim)
    assert p.n == n and p.dim == dim
    assert abs(p.mu[p.mu > 0].sum() - 1) < 1e-12
    assert abs(p.mu[p.mu < 0].sum() + 1) < 1e-12
    assert 0 <= p.alpha <= 1
    assert np.all((p.coords >= 0) & (p.coords <= 1))
    assert validate(p) == []


def test_generation_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_problem(generate_random_problem(5, 42), a)
    save_problem(generate_random_problem(5, 42), b)
    assert a.read_bytes() == b.read_bytes()
    assert generate_random_problem(5, 43) != generate_random_problem(5, 42)


def test_n_below_two_rejected():
    with pytest.raises(ValueError):
        generate_random_problem(1, 0)
    with pytest.raises(ValueError):
        generate_random_problem(3, 0, dim=1)


def test_validate_examples():
    ok = BotProblem.from_arrays([[0, 0], [1, 0]], [1, -1], 0.5)
    assert validate(ok) == []
    bad = BotProblem(0.5, (Terminal((0.0, 0.0), 1.0), Terminal((1.0, 0.0), -0.9)))
    v = validate(bad)
    assert len(v) == 1 and "mass imbalance" in v[0]
    dup = BotProblem(0.5, (Terminal((0.0, 0.0), 1.0), Terminal((0.0, 0.0), -0.5), Terminal((1.0, 1.0), -0.5)))
    v = validate(dup)
    assert len(v) == 1 and "coincident terminals" in v[0]


def test_validate_sign_and_alpha():
    only_sources = BotProblem(0.5, (Terminal((0.0, 0.0), 1.0), Terminal((1.0, 0.0), 1.0)))
    assert any("sink" in s for s in validate(only_sources))
    assert validate(BotProblem.from_arrays([[0, 0], [1, 0]], [1, -1], 1.5))


@given(st.integers(2, 12), st.integers(0, 10**6), st.integers(2, 4))
def test_json_round_trip_bit_exact(tmp_path_factory, n, seed, dim):
    p = generate_random_problem(n, seed, dim)
    path = tmp_path_factory.mktemp("rt") / "p.json"
    save_problem(p, path)
    q = load_problem(path)
    assert q.alpha == p.alpha
    assert np.array_equal(q.coords, p.coords) and np.array_equal(q.mu, p.mu)


def test_load_renormalizes_within_tolerance(tmp_path):
    data = {"alpha": 0.3, "dim": 2, "terminals": [{"pos": [0, 0], "mu": 1.0 + 4e-10}, {"pos": [1, 0], "mu": -1.0}]}
    path = tmp_path / "p.json"
    path.write_text(json.dumps(data))
    p = load_problem(path)
    assert abs(p.mu.sum()) < 1e-15


def test_load_reports_parse_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"alpha": 0.5,\n  "dim": 2,\n  oops}')
    with pytest.raises(InvalidProblemError, match="line 3"):
        load_problem(path)


def test_load_rejects_invalid_problem(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"alpha": 0.3, "dim": 2, "terminals": [{"pos": [0, 0], "mu": 1.0},
                                                                   {"pos": [1, 0], "mu": -0.5}]}))
    with pytest.raises(InvalidProblemError):
        load_problem(path)


def test_scaled():
    p = generate_random_problem(4, 0)
    q = p.scaled(2.0, 3.0)
    assert np.allclose(q.coords, 2 * p.coords) and np.allclose(q.mu, 3 * p.mu)
