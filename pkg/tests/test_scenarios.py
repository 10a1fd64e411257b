import math

import numpy as np
import pytest

from nonholonomic import SCENARIOS, State, build_scenario, oracle_state, simulate, solve_sode
from nonholonomic.errors import InvalidParam, NoClosedForm, UnknownScenario
from nonholonomic.scenarios import scenario_defaults

from conftest import max_abs


@pytest.mark.parametrize("name", SCENARIOS)
def test_defaults_build_and_start_on_constraint(name):
    spec = build_scenario(name)
    assert spec.params == scenario_defaults(name)
    assert spec.problem.on_constraint(spec.initial_state)


def test_rolling_disk_spec():
    spec = build_scenario("rolling_disk")
    p = spec.problem
    assert (p.r, p.s, p.forces.is_chetaev) == (2, 0, True)
    assert p.model.coords == ("x", "y", "theta", "phi")


def test_free_particle_spec():
    spec = build_scenario("free_particle")
    assert spec.problem.is_unconstrained
    res = solve_sode(spec.problem, State([1, 2], [3, 4]))
    assert np.array_equal(res.a, [0, 0])


def test_parameter_validation():
    with pytest.raises(UnknownScenario):
        build_scenario("tippe_top")
    with pytest.raises(InvalidParam):
        build_scenario("rolling_disk", {"mass": 2})
    with pytest.raises(InvalidParam):
        build_scenario("rolling_disk", {"M": "heavy"})
    with pytest.raises(InvalidParam):
        build_scenario("rolling_disk", {"M": math.inf})
    assert build_scenario("rolling_disk", {"M": "2.5"}).params["M"] == 2.5


def test_oracle_missing():
    for name in ("appell_rho", "benenti_disks"):
        spec = build_scenario(name)
        with pytest.raises(NoClosedForm):
            oracle_state(spec, spec.initial_state, 1.0)


def test_rolling_disk_oracle_quarter_turn(rolling_disk):
    st = oracle_state(rolling_disk, rolling_disk.initial_state, math.pi / 2)
    assert np.allclose(st.q, [2, 2, math.pi / 2, math.pi], atol=1e-15)


def test_rolling_disk_oracle_straight_line(rolling_disk):
    s0 = State([1, 2, 0.5, 0], [math.cos(0.5) * 3, math.sin(0.5) * 3, 0, 3])
    st = oracle_state(rolling_disk, s0, 2.0)
    assert np.allclose(st.q, [1 + 6 * math.cos(0.5), 2 + 6 * math.sin(0.5), 0.5, 6], atol=1e-14)


def test_appell_oracle_from_rest():
    spec = build_scenario("appell_rho0")
    st = oracle_state(spec, State([0] * 5, [0] * 5), 1.0)
    assert st.q[4] == pytest.approx(-0.7538461538461538, abs=1e-15)
    assert st.q[2] == pytest.approx(-0.3769230769230769, abs=1e-15)


def test_free_particle_oracle_identity():
    spec = build_scenario("free_particle")
    s0 = State([0.3, -1], [2, 5])
    assert np.array_equal(oracle_state(spec, s0, 0.0).as_vector(), s0.as_vector())


ORACLE_STARTS = {
    "rolling_disk": [State([0, 0, 0, 0], [2, 0, 1, 2]), State([1, -1, 0.4, 2], [0.5 * math.cos(0.4), 0.5 * math.sin(0.4), -0.7, 0.5])],
    "appell_rho0": [State([0] * 5, [0] * 5), State([0, 1, 2, 0.3, 0], [math.cos(0.3), math.sin(0.3), 0.5, 1.2, 1.0])],
    "benenti_points": [State([0, 0, 1, 0], [1, 1, 2, 2])],
    "free_particle": [State([0, 0], [1, 0.5])],
}


@pytest.mark.parametrize("name", sorted(ORACLE_STARTS))
def test_oracles_satisfy_constraints(name):
    spec = build_scenario(name)
    for s0 in ORACLE_STARTS[name]:
        for t in np.linspace(0, 5, 23):
            st = oracle_state(spec, s0, float(t))
            assert max_abs(spec.problem.constraint_values(st)) <= 1e-12


@pytest.mark.parametrize("name", sorted(ORACLE_STARTS))
def test_simulation_follows_oracle(name):
    spec = build_scenario(name)
    for s0 in ORACLE_STARTS[name]:
        tr = simulate(spec.problem, s0, 1e-2, 1.0)
        assert max_abs(tr.final.as_vector() - oracle_state(spec, s0, 1.0).as_vector()) <= 1e-8


def test_appell_rho_zero_matches_rho0(sampled_states):
    p0 = build_scenario("appell_rho0").problem
    p = build_scenario("appell_rho", {"rho": 0}).problem
    for st in sampled_states("appell_rho0"):
        assert p.on_constraint(st)
        a0 = solve_sode(p0, st).a
        a = solve_sode(p, st).a
        assert max_abs(a - a0) <= 1e-10


def test_benenti_disks_reduce_to_independent_disks():
    spec = build_scenario("benenti_disks")
    s0 = spec.initial_state
    tr = simulate(spec.problem, s0, 1e-3, 2.0, allow_underdetermined=True)
    assert tr.metadata["non_unique"] is True
    P = spec.params
    for k, (M, R, I1, I2) in enumerate([("M1", "R1", "I1_1", "I2_1"), ("M2", "R2", "I1_2", "I2_2")]):
        disk = build_scenario("rolling_disk", {"M": P[M], "R": P[R], "I1": P[I1], "I2": P[I2]})
        sl = slice(4 * k, 4 * k + 4)
        one = simulate(disk.problem, State(s0.q[sl], s0.v[sl]), 1e-3, 2.0)
        assert max_abs(tr.q[:, sl] - one.q) <= 1e-8
        assert max_abs(tr.v[:, sl] - one.v) <= 1e-8
