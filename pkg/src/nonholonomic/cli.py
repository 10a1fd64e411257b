"""Command line interface: ``check``, ``simulate``, ``algorithm``, ``scenarios``.

Exit status is 0 on success, 1 on numerical failure (or, for ``check``,
when some sampled state is not uniquely solvable) and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections import Counter

import numpy as np

from .errors import NonholonomicError, NotProjectable, ProjectionFailed, SingularHessian
from .mechanics import State
from .problemfile import load_problem_file
from .scenarios import SCENARIOS, build_scenario, scenario_defaults
from .simulate import Trajectory, project_to_constraints, simulate
from .solver import (
    check_theorem2,
    compatibility_matrix,
    integrability_algorithm,
    solve_sode,
)
from .constraints import admissibility


class UsageError(Exception):
    pass


def write_trajectory_csv(tr: Trajectory, path) -> None:
    """Write ``tr`` as comma-separated text with 17 significant digits."""
    header = ["t"]
    header += [f"q_{c}" for c in tr.coords]
    header += [f"v_{c}" for c in tr.coords]
    header += ["E"]
    header += [f"psi_{i}" for i in range(1, tr.n_psi + 1)]
    header += [f"lambda_{i}" for i in range(1, tr.n_lambda + 1)]
    header += [f"p_{i}" for i in range(1, len(tr.coords) + 1)]

    def fmt(x):
        return format(float(x), ".17g")

    own = not hasattr(path, "write")
    fh = open(path, "w", newline="") if own else path
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(tr)):
            st = tr.states[i]
            row = [tr.times[i], *st.q, *st.v, tr.energy[i], *tr.psi_residuals[i], *tr.lambdas[i], *tr.momenta[i]]
            w.writerow([fmt(x) for x in row])
    finally:
        if own:
            fh.close()


def _parse_params(items):
    out = {}
    for item in items or []:
        name, eq, value = item.partition("=")
        if not eq:
            raise UsageError(f"--param expects name=value, got {item!r}")
        out[name] = value
    return out


def _parse_state(text, n):
    try:
        vals = [float(x) for x in text.replace(" ", "").split(",") if x != ""]
    except ValueError:
        raise UsageError(f"state must be {2 * n} comma-separated numbers: {text!r}") from None
    if len(vals) != 2 * n:
        raise UsageError(f"state needs {2 * n} values (q then v), got {len(vals)}")
    return State(vals[:n], vals[n:])


def _load(args):
    if bool(args.scenario) == bool(args.file):
        raise UsageError("give exactly one of --scenario or --file")
    if args.scenario:
        if args.scenario not in SCENARIOS:
            raise UsageError(f"unknown scenario {args.scenario!r}; choose from {', '.join(SCENARIOS)}")
        spec = build_scenario(args.scenario, _parse_params(args.param))
        return spec.problem, spec.initial_state
    if args.param:
        raise UsageError("--param applies only to --scenario")
    return load_problem_file(args.file), None


def sample_states(p, n_samples, seed=42, max_tries=None):
    """On-constraint states from projected uniform seeds in ``[-1, 1]^2n``."""
    rng = np.random.default_rng(seed)
    states = []
    tries = 0
    max_tries = max_tries or 50 * n_samples
    while len(states) < n_samples and tries < max_tries:
        tries += 1
        x = rng.uniform(-1.0, 1.0, 2 * p.n)
        st = State.from_vector(x)
        try:
            st = project_to_constraints(p, st)
        except (NotProjectable, ProjectionFailed, SingularHessian):
            continue
        states.append(st)
    return states


def cmd_check(args, out):
    p, _ = _load(args)
    if args.state:
        states = [_parse_state(s, p.n) for s in args.state]
    else:
        states = sample_states(p, args.samples, args.seed)
        if len(states) < args.samples:
            print(f"warning: only {len(states)} of {args.samples} seeds projected onto the constraints", file=sys.stderr)
    cols = [
        "state", "admissible", "adm_rank", "rank_M", "rcond_M",
        "rank_cond", "intersection", "regular", "definite", "classification",
    ]
    print(" ".join(f"{c:>14}" for c in cols), file=out)
    tally = Counter()
    for i, st in enumerate(states):
        adm = admissibility(p, st)
        cm = compatibility_matrix(p, st)
        rep = check_theorem2(p, st)
        res = solve_sode(p, st)
        key = res.classification.value
        tally[key] += 1
        row = [
            i, adm.admissible, adm.rank, cm.rank, f"{cm.rcond:.3e}",
            rep.rank_condition, rep.intersection_condition, rep.regularity,
            rep.definite_hessian, res.label,
        ]
        print(" ".join(f"{str(c):>14}" for c in row), file=out)
    print(f"states: {len(states)}", file=out)
    for key in ("Unique", "Underdetermined", "Infeasible"):
        label = "non-unique" if key == "Underdetermined" else key.lower()
        print(f"{label}: {tally[key]}", file=out)
    return 0 if states and tally["Unique"] == len(states) else 1


def cmd_simulate(args, out):
    p, s0 = _load(args)
    if args.state:
        s0 = _parse_state(args.state, p.n)
    if s0 is None:
        raise UsageError("--state is required with --file")
    tr = simulate(
        p, s0, args.h, args.t_end,
        project=args.project, allow_underdetermined=args.allow_underdetermined,
    )
    if args.out:
        write_trajectory_csv(tr, args.out)
        fin = tr.final
        print(f"wrote {len(tr)} rows to {args.out}; final t={tr.times[-1]!r}", file=out)
        print("final q: " + ",".join(format(x, ".17g") for x in fin.q), file=out)
        print("final v: " + ",".join(format(x, ".17g") for x in fin.v), file=out)
    else:
        write_trajectory_csv(tr, out)
    if tr.metadata.get("non_unique"):
        print("note: trajectory passed through non-unique states (minimum-norm multipliers)", file=sys.stderr)
    return 0


def cmd_algorithm(args, out):
    p, _ = _load(args)
    st = _parse_state(args.state, p.n)
    trace = integrability_algorithm(p, st, args.depth)
    print("k,member,feasible,appended_residual,locally_empty", file=out)
    for step in trace.steps:
        feas = "" if step.feasible is None else step.feasible
        empty = "" if step.locally_empty is None else step.locally_empty
        print(f"{step.k},{step.member},{feas},{step.appended_residual:.17g},{empty}", file=out)
    print(f"verdict: {trace.verdict}", file=out)
    return 0


def cmd_scenarios(args, out):
    for name in SCENARIOS:
        spec = build_scenario(name)
        params = ", ".join(f"{k}={v:g}" for k, v in scenario_defaults(name).items()) or "-"
        print(f"{name}: {spec.description}", file=out)
        print(f"    coords: {' '.join(spec.problem.model.coords)}", file=out)
        print(f"    params: {params}", file=out)
        print(f"    constraints: {spec.problem.r}, directions: {spec.problem.s}, forces: {spec.problem.forces}", file=out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nonholonomic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def source(sp):
        sp.add_argument("--scenario", help="built-in scenario name")
        sp.add_argument("--file", help="problem file")
        sp.add_argument("--param", action="append", metavar="NAME=VALUE", help="override a scenario parameter")

    c = sub.add_parser("check", help="sample on-constraint states and test solvability")
    source(c)
    c.add_argument("--samples", type=int, default=100)
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--state", action="append", help="explicit state q...,v... (repeatable; replaces sampling)")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("simulate", help="integrate and write a trajectory CSV")
    source(s)
    s.add_argument("--h", type=float, default=1e-3)
    s.add_argument("--t-end", type=float, default=1.0)
    s.add_argument("--state", help="initial state q...,v... (default: scenario state)")
    s.add_argument("--project", action="store_true", help="project velocities onto the constraints after each step")
    s.add_argument("--allow-underdetermined", action="store_true")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("algorithm", help="run the constraint algorithm at one state")
    source(a)
    a.add_argument("--state", required=True)
    a.add_argument("--depth", type=int, default=3)
    a.set_defaults(func=cmd_algorithm)

    sc = sub.add_parser("scenarios", help="list built-in scenarios")
    sc.set_defaults(func=cmd_scenarios)
    return parser


def run_command(argv, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args, out)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except NonholonomicError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))
