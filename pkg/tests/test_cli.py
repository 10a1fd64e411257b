import csv
import io
import math

import numpy as np
import pytest

from nonholonomic import (
    SCENARIOS,
    State,
    Trajectory,
    build_scenario,
    format_problem,
    load_problem_file,
    parse_problem,
    simulate,
    solve_sode,
)
from nonholonomic.cli import run_command, write_trajectory_csv
from nonholonomic.errors import DimensionMismatch, NonholonomicError, SectionError


DISK_FILE = """\
# vertical rolling disk
coords x y theta phi
params M=1 R=1 I1=1 I2=1
lagrangian 0.5*M*(dx^2 + dy^2) + 0.5*I2*dtheta^2 + 0.5*I1*dphi^2
constraint dx - R*cos(theta)*dphi
constraint dy - R*sin(theta)*dphi
forces chetaev
"""


def run(*argv):
    out = io.StringIO()
    code = run_command(list(argv), out)
    return code, out.getvalue()


def random_states(n_coords, count, seed=5):
    rng = np.random.default_rng(seed)
    return [State(rng.uniform(-1, 1, n_coords), rng.uniform(-1, 1, n_coords)) for _ in range(count)]


def same_dynamics(p, q, states):
    for st in states:
        a, b = solve_sode(p, st), solve_sode(q, st)
        assert a.classification == b.classification
        if a.a is not None:
            assert np.abs(a.a - b.a).max(initial=0.0) <= 1e-12
            assert np.abs(a.lam - b.lam).max(initial=0.0) <= 1e-12


# --- problem files --------------------------------------------------------------------


def test_rolling_disk_file_matches_builder(tmp_path):
    path = tmp_path / "disk.nh"
    path.write_text(DISK_FILE)
    p = load_problem_file(path)
    same_dynamics(p, build_scenario("rolling_disk").problem, random_states(4, 10))


@pytest.mark.parametrize("name", SCENARIOS)
def test_format_round_trip(name):
    p = build_scenario(name).problem
    q = parse_problem(format_problem(p))
    assert format_problem(q) == format_problem(p)
    same_dynamics(p, q, random_states(p.n, 10))
    st = random_states(p.n, 1)[0]
    assert np.array_equal(p.evaluate(st)[1], q.evaluate(st)[1])


def test_missing_lagrangian():
    with pytest.raises(SectionError):
        parse_problem("coords x\nconstraint dx\n")


def test_force_count_mismatch():
    text = "coords x y\nlagrangian 0.5*(dx^2+dy^2)\nconstraint dy\nforce 1, 0\nforce 0, 1\n"
    with pytest.raises(DimensionMismatch):
        parse_problem(text)


def test_syntax_error_reports_line():
    text = "coords x\nparams k=2\n\nlagrangian 0.5*dx^2 - k*(x^2\n"
    with pytest.raises(SectionError) as info:
        parse_problem(text)
    assert info.value.line == 4


@pytest.mark.parametrize(
    "text",
    [
        "coords x\nlagrangian 0.5*dx^2\nmass 3\n",
        "coords x\nlagrangian 0.5*dx^2\nparams k\n",
        "coords x\nlagrangian 0.5*dx^2 + y\n",
        "coords x y\nlagrangian 0.5*dx^2\ndirection 0, 1\n",
        "coords x\nlagrangian 0.5*dx^2\nforces newton\n",
    ],
)
def test_section_errors(text):
    with pytest.raises(SectionError):
        parse_problem(text)


def test_missing_file(tmp_path):
    with pytest.raises(NonholonomicError):
        load_problem_file(tmp_path / "nope.nh")


# --- CSV ---------------------------------------------------------------------------------


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


def test_csv_round_trip_is_exact(disk_run_quarter):
    buf = io.StringIO()
    write_trajectory_csv(disk_run_quarter, buf)
    header, data = read_csv(buf.getvalue())
    assert header[:9] == ["t", "q_x", "q_y", "q_theta", "q_phi", "v_x", "v_y", "v_theta", "v_phi"]
    assert header[9:] == ["E", "psi_1", "psi_2", "lambda_1", "lambda_2", "p_1", "p_2", "p_3", "p_4"]
    tr = disk_run_quarter
    want = np.array([
        [t, *s.q, *s.v, e, *psi, *lam, *mom]
        for t, s, e, psi, lam, mom in zip(tr.times, tr.states, tr.energy, tr.psi_residuals, tr.lambdas, tr.momenta)
    ])
    assert np.array_equal(data, want)
    assert np.abs(data[:, 10:12]).max() <= 1e-6
    assert "\r" not in buf.getvalue()


def test_csv_free_particle_three_steps():
    p = build_scenario("free_particle").problem
    tr = simulate(p, State([0, 0], [1, 0.5]), 0.1, 0.3)
    buf = io.StringIO()
    write_trajectory_csv(tr, buf)
    header, data = read_csv(buf.getvalue())
    assert header == ["t", "q_x", "q_y", "v_x", "v_y", "E", "p_1", "p_2"]
    assert data.shape == (4, 8)
    assert np.all(data[:, 5] == data[0, 5])


def test_csv_empty_trajectory(tmp_path):
    path = tmp_path / "empty.csv"
    write_trajectory_csv(Trajectory(("x",), 1, 1), path)
    assert path.read_text() == "t,q_x,v_x,E,psi_1,lambda_1,p_1\n"


# --- commands ------------------------------------------------------------------------------


def test_check_rolling_disk():
    code, out = run("check", "--scenario", "rolling_disk")
    assert code == 0
    assert "unique: 100" in out and "infeasible: 0" in out


def test_check_misaligned():
    code, out = run("check", "--scenario", "misaligned_force", "--samples", "20")
    assert code == 1
    assert "infeasible: 20" in out


def test_check_reports_non_unique():
    code, out = run("check", "--scenario", "benenti_points_nonchetaev", "--state", "0,0,1,0,1,1,1,1", "--state", "0,0,1,0,1,0,0,1")
    assert code == 1
    assert "non-unique: 1" in out and "unique: 1" in out


def test_check_file(tmp_path):
    path = tmp_path / "disk.nh"
    path.write_text(DISK_FILE)
    code, out = run("check", "--file", str(path), "--samples", "5")
    assert code == 0 and "unique: 5" in out


def test_simulate_writes_csv(tmp_path, rolling_disk):
    path = tmp_path / "run.csv"
    code, _ = run("simulate", "--scenario", "rolling_disk", "--h", "0.001", "--t-end", "1.5707963", "--out", str(path))
    assert code == 0
    _, data = read_csv(path.read_text())
    want = [2, 2, math.pi / 2, math.pi]
    oracle = [2 * math.sin(1.5707963), 2 * (1 - math.cos(1.5707963)), 1.5707963, 2 * 1.5707963]
    assert data[-1, 0] == 1.5707963
    assert np.abs(data[-1, 1:5] - oracle).max() <= 1e-6
    assert np.abs(data[-1, 1:5] - want).max() <= 1e-6


def test_simulate_to_stdout():
    code, out = run("simulate", "--scenario", "free_particle", "--h", "0.5", "--t-end", "1")
    assert code == 0
    assert out.splitlines()[0] == "t,q_x,q_y,v_x,v_y,E,p_1,p_2"
    assert len(out.splitlines()) == 4


def test_simulate_numerical_failure_exits_1(capsys):
    code, _ = run("simulate", "--scenario", "misaligned_force", "--state", "0,0,1,0")
    assert code == 1
    assert "t=0.0" in capsys.readouterr().err


def test_algorithm_command():
    code, out = run("algorithm", "--scenario", "misaligned_force", "--state", "0,0,1,0")
    assert code == 0
    assert out.strip().splitlines()[-1] == "verdict: ExcludedAtStep(1)"
    code, out = run("algorithm", "--scenario", "rolling_disk", "--state", "0,0,0,0,2,0,1,2")
    assert out.strip().endswith("verdict: CompatibleUnique")


def test_scenarios_command():
    code, out = run("scenarios")
    assert code == 0
    for name in SCENARIOS:
        assert f"{name}:" in out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["check"],
        ["check", "--scenario", "nope"],
        ["check", "--scenario", "rolling_disk", "--param", "M"],
        ["simulate", "--scenario", "rolling_disk", "--state", "1,2"],
        ["algorithm", "--scenario", "rolling_disk"],
        ["simulate", "--scenario", "rolling_disk", "--h", "-1"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert run_command(argv, io.StringIO()) == 2


def test_bad_param_value_exits_1():
    assert run("check", "--scenario", "rolling_disk", "--param", "M=abc")[0] == 1


def test_param_override_is_used():
    code, out = run("simulate", "--scenario", "rolling_disk", "--param", "R=2", "--h", "0.5", "--t-end", "0.5")
    assert code == 0
    first = out.splitlines()[1].split(",")
    assert float(first[5]) == 4.0  # v_x = 2 R
