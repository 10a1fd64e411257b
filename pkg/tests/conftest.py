import math

import numpy as np
import pytest

from nonholonomic import State, build_scenario, simulate
from nonholonomic.cli import sample_states

DISK_S0 = State([0, 0, 0, 0], [2, 0, 1, 2])  # x y theta phi / dx dy dtheta dphi


@pytest.fixture(scope="session")
def rolling_disk():
    return build_scenario("rolling_disk")


@pytest.fixture(scope="session")
def disk_run_10s(rolling_disk):
    """Rolling disk, defaults, h=1e-3 to t=10, no projection."""
    return simulate(rolling_disk.problem, DISK_S0, 1e-3, 10.0)


@pytest.fixture(scope="session")
def disk_run_quarter(rolling_disk):
    return simulate(rolling_disk.problem, DISK_S0, 1e-3, math.pi / 2)


def appell_rho_start(params, theta=0.0, dtheta=1.0, dphi=1.0):
    """On-constraint Appell (rho variant) state at rest position with given rates."""
    R, rho, r = params["R"], params["rho"], params["r"]
    dx = R * math.cos(theta) * dphi - rho * math.sin(theta) * dtheta
    dy = R * math.sin(theta) * dphi + rho * math.cos(theta) * dtheta
    return State([0, 0, 0, theta, 0], [dx, dy, r * dphi, dtheta, dphi])


@pytest.fixture(scope="session")
def appell_rho_run():
    spec = build_scenario("appell_rho", {"rho": 0.3})
    s0 = appell_rho_start(spec.params)
    return spec, simulate(spec.problem, s0, 1e-3, 1.0)


@pytest.fixture(scope="session")
def sampled_states():
    cache = {}

    def get(name, n=100, seed=42):
        key = (name, n, seed)
        if key not in cache:
            spec = build_scenario(name)
            cache[key] = sample_states(spec.problem, n, seed)
        return cache[key]

    return get


def max_abs(a):
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


ACCEPTANCE_LINES = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def emit(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
