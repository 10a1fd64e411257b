"""Built-in mechanical systems with documented defaults and closed-form oracles.

All masses, radii and inertias default to 1, the pulley radius ``r`` to 0.5,
gravity ``g`` to 9.8 and the Appell frame length ``rho`` to 0.3.  For the
disks, ``I1`` is the inertia about the rolling axis (paired with ``phi``) and
``I2`` the inertia about the vertical axis (paired with ``theta``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constraints import CovectorField, ForceSpec, NonholonomicProblem, build_problem
from .errors import InvalidParam, NoClosedForm, UnknownScenario
from .mechanics import LagrangianModel, State


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    params: dict
    problem: NonholonomicProblem
    description: str = ""
    oracle: Callable | None = field(default=None, repr=False)
    initial_state: State | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# builders


def _free_particle(P):
    m = LagrangianModel(["x", "y"], "0.5*(dx^2 + dy^2)", P)
    return build_problem(m), State([0, 0], [1, 0.5])


def _rolling_disk(P):
    m = LagrangianModel(
        ["x", "y", "theta", "phi"],
        "0.5*M*(dx^2 + dy^2) + 0.5*I2*dtheta^2 + 0.5*I1*dphi^2",
        P,
    )
    prob = build_problem(m, ["dx - R*cos(theta)*dphi", "dy - R*sin(theta)*dphi"])
    R = P["R"]
    return prob, State([0, 0, 0, 0], [2 * R, 0, 1, 2])


_APPELL_PSI = ["dx - R*cos(theta)*dphi", "dy - R*sin(theta)*dphi", "r*dphi - dz"]


def _appell_rho0(P):
    m = LagrangianModel(
        ["x", "y", "z", "theta", "phi"],
        "0.5*(M + m)*(dx^2 + dy^2) + 0.5*m*dz^2 + 0.5*I1*dphi^2 + 0.5*I2*dtheta^2 - m*g*z",
        P,
    )
    return build_problem(m, _APPELL_PSI), State([0] * 5, [0] * 5)


def _appell_rho(P):
    # (x, y) is the hanging mass; the contact point is (x - rho cos, y - rho sin)
    xd = "(dx + rho*sin(theta)*dtheta)"
    yd = "(dy - rho*cos(theta)*dtheta)"
    m = LagrangianModel(
        ["x", "y", "z", "theta", "phi"],
        f"0.5*M*({xd}^2 + {yd}^2) + 0.5*m*(dx^2 + dy^2 + dz^2)"
        " + 0.5*I1*dphi^2 + 0.5*I2*dtheta^2 - m*g*z",
        P,
    )
    psi = [f"{xd} - R*cos(theta)*dphi", f"{yd} - R*sin(theta)*dphi", "r*dphi - dz"]
    prob = build_problem(m, psi)
    R, rho, r = P["R"], P["rho"], P["r"]
    # theta = 0, dtheta = dphi = 1
    return prob, State([0] * 5, [R, rho, r, 1.0, 1.0])


def _benenti_model(P):
    return LagrangianModel(
        ["x1", "y1", "x2", "y2"],
        "0.5*m1*(dx1^2 + dy1^2) + 0.5*m2*(dx2^2 + dy2^2)",
        P,
    )


_PARALLEL = "dx1*dy2 - dx2*dy1"


def _benenti_points(P):
    return build_problem(_benenti_model(P), [_PARALLEL]), State([0, 0, 1, 0], [1, 1, 2, 2])


def _benenti_points_nonchetaev(P):
    m = _benenti_model(P)
    force = CovectorField.parse(m, ["m1*f1", "m1*f2", "m2*f1", "m2*f2"])
    prob = build_problem(m, [_PARALLEL], forces=ForceSpec.custom([force]))
    return prob, State([0, 0, 1, 0], [1, 1, 2, 2])


def _benenti_disks(P):
    m = LagrangianModel(
        ["x1", "y1", "theta1", "phi1", "x2", "y2", "theta2", "phi2"],
        "0.5*M1*(dx1^2 + dy1^2) + 0.5*I2_1*dtheta1^2 + 0.5*I1_1*dphi1^2"
        " + 0.5*M2*(dx2^2 + dy2^2) + 0.5*I2_2*dtheta2^2 + 0.5*I1_2*dphi2^2",
        P,
    )
    psi = [
        "dx1 - R1*cos(theta1)*dphi1",
        "dy1 - R1*sin(theta1)*dphi1",
        "dx2 - R2*cos(theta2)*dphi2",
        "dy2 - R2*sin(theta2)*dphi2",
        "dx1*dy2 - dx2*dy1",
    ]
    R1, R2 = P["R1"], P["R2"]
    return build_problem(m, psi), State([0, 0, 0, 0, 0, 1, 0, 0], [R1, 0, 1, 1, 2 * R2, 0, 1, 2])


def _misaligned_force(P):
    m = LagrangianModel(["x", "y"], "0.5*(dx^2 + dy^2) - g*y", P)
    force = CovectorField.parse(m, ["1", "0"])
    return build_problem(m, ["dy"], forces=ForceSpec.custom([force])), State([0, 0], [0, 0])


# ---------------------------------------------------------------------------
# closed forms


def _straight_line(P, s0, t):
    return State(s0.q + t * s0.v, s0.v)


def _rolling_disk_oracle(P, s0, t):
    R = P["R"]
    x0, y0, th0, ph0 = s0.q
    _, _, w, dphi = s0.v
    th = th0 + w * t
    mid = th0 + 0.5 * w * t
    # sin(w t/2) / (w t/2), finite at w = 0
    sinc = np.sinc(0.5 * w * t / math.pi)
    x = x0 + R * dphi * t * math.cos(mid) * sinc
    y = y0 + R * dphi * t * math.sin(mid) * sinc
    return State([x, y, th, ph0 + dphi * t], [R * math.cos(th) * dphi, R * math.sin(th) * dphi, w, dphi])


def appell_phi_acceleration(P) -> float:
    """Constant wheel acceleration of the Appell machine with ``rho = 0``."""
    M, m, R, r, I1, g = P["M"], P["m"], P["R"], P["r"], P["I1"], P["g"]
    return -m * g * r / (I1 + (M + m) * R**2 + m * r**2)


def _appell_rho0_oracle(P, s0, t):
    R, r = P["R"], P["r"]
    x0, y0, z0, th0, ph0 = s0.q
    _, _, _, w, a = s0.v
    c = appell_phi_acceleration(P)
    th = th0 + w * t
    phi = ph0 + a * t + 0.5 * c * t * t
    dphi = a + c * t
    if w == 0:
        x = x0 + R * math.cos(th0) * (phi - ph0)
        y = y0 + R * math.sin(th0) * (phi - ph0)
    else:
        x = x0 + R * (
            (dphi * math.sin(th) - a * math.sin(th0)) / w + c * (math.cos(th) - math.cos(th0)) / w**2
        )
        y = y0 + R * (
            -(dphi * math.cos(th) - a * math.cos(th0)) / w + c * (math.sin(th) - math.sin(th0)) / w**2
        )
    z = z0 + r * (phi - ph0)
    return State(
        [x, y, z, th, phi],
        [R * math.cos(th) * dphi, R * math.sin(th) * dphi, r * dphi, w, dphi],
    )


# ---------------------------------------------------------------------------
# registry

_DISK = {"M": 1.0, "R": 1.0, "I1": 1.0, "I2": 1.0}
_APPELL = {"M": 1.0, "m": 1.0, "R": 1.0, "r": 0.5, "I1": 1.0, "I2": 1.0, "g": 9.8}

_REGISTRY = {
    "free_particle": (
        {},
        _free_particle,
        _straight_line,
        "unconstrained unit-mass particle in the plane",
    ),
    "rolling_disk": (dict(_DISK), _rolling_disk, _rolling_disk_oracle, "vertical disk rolling without slipping"),
    "appell_rho0": (dict(_APPELL), _appell_rho0, _appell_rho0_oracle, "Appell machine, mass hanging at the contact point"),
    "appell_rho": (
        {**_APPELL, "rho": 0.3},
        _appell_rho,
        None,
        "Appell machine with frame of length rho (contact point eliminated)",
    ),
    "benenti_points": (
        {"m1": 1.0, "m2": 1.0},
        _benenti_points,
        _straight_line,
        "two point masses with parallel velocities, Chetaev forces",
    ),
    "benenti_points_nonchetaev": (
        {"m1": 1.0, "m2": 1.0, "f1": 1.0, "f2": 0.0},
        _benenti_points_nonchetaev,
        None,
        "two point masses with parallel velocities, force m_i*(f1 dx_i + f2 dy_i)",
    ),
    "benenti_disks": (
        {"M1": 1.0, "R1": 1.0, "I1_1": 1.0, "I2_1": 1.0, "M2": 1.0, "R2": 1.0, "I1_2": 1.0, "I2_2": 1.0},
        _benenti_disks,
        None,
        "two rolling disks with parallel center velocities",
    ),
    "misaligned_force": (
        {"g": 9.8},
        _misaligned_force,
        None,
        "particle under gravity, constraint dy = 0, force only along dx (infeasible)",
    ),
}

SCENARIOS = tuple(_REGISTRY)


def scenario_defaults(name: str) -> dict:
    if name not in _REGISTRY:
        raise UnknownScenario(name)
    return dict(_REGISTRY[name][0])


def build_scenario(name: str, overrides: dict | None = None) -> ScenarioSpec:
    if name not in _REGISTRY:
        raise UnknownScenario(name)
    defaults, builder, oracle, desc = _REGISTRY[name]
    params = dict(defaults)
    for k, v in (overrides or {}).items():
        if k not in params:
            raise InvalidParam(f"scenario {name!r} has no parameter {k!r}")
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise InvalidParam(f"parameter {k!r} must be a real number, got {v!r}") from None
        if not math.isfinite(v):
            raise InvalidParam(f"parameter {k!r} must be finite")
        params[k] = v
    problem, s0 = builder(params)
    return ScenarioSpec(name, params, problem, desc, oracle, s0)


def oracle_state(spec: ScenarioSpec, s0: State, t: float) -> State:
    """Exact state at time ``t`` for scenarios with a closed-form solution."""
    if spec.oracle is None:
        raise NoClosedForm(f"scenario {spec.name!r} has no closed-form solution")
    return spec.oracle(spec.params, s0, t)
