"""Fixed-step RK4 integration of the constrained field with monitors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constraints import NonholonomicProblem
from .errors import NonFiniteState, NotProjectable, OffConstraint, ProjectionFailed, StageFailure
from .linalg import numerical_rank
from .mechanics import State, energy, legendre
from .solver import Classification, SodeResult, solve_sode

PROJECTION_TOL = 1e-12
PROJECTION_MAXITER = 20
START_TOL = 1e-9


@dataclass
class Trajectory:
    coords: tuple
    n_psi: int = 0
    n_lambda: int = 0
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    psi_residuals: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    momenta: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def append(self, t, st, E, psi, lam, p):
        self.times.append(float(t))
        self.states.append(st)
        self.energy.append(float(E))
        self.psi_residuals.append(np.asarray(psi, dtype=float))
        self.lambdas.append(np.asarray(lam, dtype=float))
        self.momenta.append(np.asarray(p, dtype=float))

    @property
    def q(self) -> np.ndarray:
        return np.array([s.q for s in self.states])

    @property
    def v(self) -> np.ndarray:
        return np.array([s.v for s in self.states])

    @property
    def final(self) -> State:
        return self.states[-1]


def _field(p, st, stage, allow_underdetermined):
    res = solve_sode(p, st)
    if res.classification is Classification.INFEASIBLE or (
        res.classification is Classification.UNDERDETERMINED and not allow_underdetermined
    ):
        raise StageFailure(stage, res.label)
    return res


def rk4_step(p: NonholonomicProblem, st: State, h: float, allow_underdetermined: bool = False) -> State:
    """One classical Runge-Kutta step of the prolonged field ``(v, a)``."""
    return _rk4(p, st, h, allow_underdetermined)[0]


def _rk4(p, st, h, allow_underdetermined):
    if not h > 0:
        raise ValueError("step size must be positive")
    st.check_finite()
    x = st.as_vector()
    r1 = _field(p, st, 1, allow_underdetermined)
    k1 = r1.field()
    r2 = _field(p, State.from_vector(x + 0.5 * h * k1), 2, allow_underdetermined)
    k2 = r2.field()
    r3 = _field(p, State.from_vector(x + 0.5 * h * k2), 3, allow_underdetermined)
    k3 = r3.field()
    r4 = _field(p, State.from_vector(x + h * k3), 4, allow_underdetermined)
    k4 = r4.field()
    out = State.from_vector(x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
    if not out.is_finite():
        raise NonFiniteState(f"non-finite state after step: {out.as_vector()}")
    return out, r1


def project_to_constraints(p: NonholonomicProblem, st: State) -> State:
    """Move ``v`` (only) onto the constraint set along the Hessian metric.

    Each Newton step solves ``min |dv|_H`` subject to the linearized
    constraints, i.e. ``dv = -H^-1 J^T (J H^-1 J^T)^-1 psi`` with ``J = dpsi/dv``.
    """
    st.check_finite()
    if p.r == 0:
        return st
    n = p.n
    q, v = st.q, st.v.copy()
    for it in range(PROJECTION_MAXITER + 1):
        cur = State(q, v)
        psi, D0, _ = p.evaluate(cur)
        if np.all(np.abs(psi) <= PROJECTION_TOL):
            return cur if it else st
        if it == PROJECTION_MAXITER:
            break
        J = D0[: p.r, n:]
        if numerical_rank(J) < p.r:
            raise NotProjectable("constraint velocity Jacobian is rank deficient")
        H = p.model.local_terms(cur).H
        HiJt = np.linalg.solve(H, J.T)
        v = v - HiJt @ np.linalg.solve(J @ HiJt, psi)
        if not np.all(np.isfinite(v)):
            break
    psi = p.constraint_values(State(q, v)) if np.all(np.isfinite(v)) else np.array([math.inf])
    raise ProjectionFailed(float(np.max(np.abs(psi))))


def _monitors(p, st, res: SodeResult | None):
    psi = p.constraint_values(st)
    if res is None:
        try:
            res = solve_sode(p, st)
        except Exception:
            res = None
    lam = res.lam if res is not None and res.lam is not None else np.full(p.corank, math.nan)
    return energy(p.model, st), psi, lam, legendre(p.model, st)


def simulate(
    p: NonholonomicProblem,
    s0: State,
    h: float,
    t_end: float,
    project: bool = False,
    allow_underdetermined: bool = False,
    allow_off_constraint: bool = False,
) -> Trajectory:
    """Integrate from ``s0`` to ``t_end`` with fixed step ``h``.

    The last step is shortened so the run ends exactly at ``t_end``.  The
    multipliers recorded at a time are those solved at that state.
    """
    if not h > 0 or not t_end > 0:
        raise ValueError("h and t_end must be positive")
    s0.check_finite()
    if not allow_off_constraint and not p.on_constraint(s0, START_TOL):
        raise OffConstraint(
            f"initial state violates constraints: {p.constraint_values(s0)}"
        )
    tr = Trajectory(p.model.coords, p.r, p.corank)
    tr.metadata["non_unique"] = False
    st = s0
    t = 0.0
    nsteps = int(math.floor(t_end / h + 1e-9))
    times = [i * h for i in range(1, nsteps + 1)]
    if not times or t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times.append(t_end)
    else:
        times[-1] = t_end
    for t_next in times:
        try:
            new, res = _rk4(p, st, t_next - t, allow_underdetermined)
        except StageFailure as e:
            e.time = t
            e.args = (f"RK4 stage {e.stage} is {e.classification} at t={t!r}",)
            raise
        if res.classification is Classification.UNDERDETERMINED:
            tr.metadata["non_unique"] = True
        tr.append(t, st, *_monitors(p, st, res))
        if project:
            try:
                new = project_to_constraints(p, new)
            except ProjectionFailed as e:
                e.time = t_next
                raise
        st, t = new, t_next
    tr.append(t, st, *_monitors(p, st, None))
    return tr
