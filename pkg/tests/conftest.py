import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text(encoding="utf-8"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with the measured numbers."""
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call" or "test_acceptance" not in rep.nodeid:
                continue
            info = dict(rep.user_properties)
            if "criterion" in info:
                lines.append((info["criterion"], "PASS" if rep.passed else "FAIL", info.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for num, status, detail in sorted(lines):
            terminalreporter.write_line(f"C{num:02d} {status}  {detail}")
