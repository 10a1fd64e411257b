"""Multiplier elimination, solvability classification and hypothesis checks.

A constrained field has the form ``(v, a)`` with
``a = a_free + H^-1 F^T lam``: the free Euler-Lagrange acceleration plus
the response to a combination of force covectors.  Requiring ``(v, a)`` to
annihilate every generator of ``D0`` gives the square multiplier system

    M^T lam = -rho,   M[B, C] = f^B . H^-1 . beta^C,
    rho[C] = gamma^C . v + beta^C . a_free

whose rank and consistency decide between a unique field, a family of
fields (minimum-norm multipliers are reported), or no field at all.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .constraints import NonholonomicProblem
from .linalg import RANK_RTOL, null_space, numerical_rank, rcond, row_space
from .mechanics import State, _require_regular, energy_differential, symplectic_data

#: relative least-squares residual separating underdetermined from infeasible
CONSISTENCY_RTOL = 1e-8
#: finite-difference step for gradients of appended residual functions
FD_STEP = 1e-6
MEMBERSHIP_TOL = 1e-9


class Classification(enum.Enum):
    UNIQUE = "Unique"
    UNDERDETERMINED = "Underdetermined"
    INFEASIBLE = "Infeasible"


class CompatibilityMatrix(NamedTuple):
    M: np.ndarray
    rank: int
    rcond: float


@dataclass(frozen=True)
class SodeResult:
    classification: Classification
    a: np.ndarray | None
    lam: np.ndarray | None
    residual: float
    kernel_dim: int = 0
    v: np.ndarray | None = None
    M: np.ndarray | None = None
    rho: np.ndarray | None = None
    #: whether the acceleration is unique even if the multipliers are not
    accel_unique: bool = True

    @property
    def label(self) -> str:
        if self.classification is Classification.UNDERDETERMINED:
            return f"Underdetermined({self.kernel_dim})"
        return self.classification.value

    @property
    def is_unique(self) -> bool:
        return self.classification is Classification.UNIQUE

    @property
    def is_feasible(self) -> bool:
        return self.classification is not Classification.INFEASIBLE

    def field(self) -> np.ndarray:
        """The prolonged vector ``(v, a)``; its first half is always ``v``."""
        if self.a is None:
            raise ValueError("no vector field at an infeasible state")
        return np.concatenate([self.v, self.a])


@dataclass(frozen=True)
class TheoremReport:
    rank_condition: bool
    intersection_condition: bool
    regularity: bool
    definite_hessian: bool
    force_rank: int
    corank: int
    annihilator_rank: int
    intersection_dim: int
    constraint_rank: int
    regularity_dim: int

    @property
    def compatible(self) -> bool:
        return self.rank_condition and self.intersection_condition


@dataclass(frozen=True)
class AlgorithmStep:
    k: int
    member: bool
    feasible: bool | None
    appended_residual: float = 0.0
    appended_gradient: np.ndarray | None = None
    locally_empty: bool | None = None


@dataclass(frozen=True)
class AlgorithmTrace:
    steps: list = field(default_factory=list)
    verdict: str = ""

    @property
    def excluded_at(self) -> int | None:
        if self.verdict.startswith("ExcludedAtStep("):
            return int(self.verdict[len("ExcludedAtStep(") : -1])
        return None


class _System(NamedTuple):
    H: np.ndarray
    a_free: np.ndarray
    D0: np.ndarray
    F: np.ndarray
    M: np.ndarray
    rho: np.ndarray


def _assemble(p: NonholonomicProblem, st: State, extra_rows=None) -> _System:
    n = p.n
    t = p.model.local_terms(st)
    _require_regular(t.H)
    a_free = np.linalg.solve(t.H, t.dLdq - t.C @ st.v)
    _, D0, F = p.evaluate(st)
    if extra_rows is not None and len(extra_rows):
        D0 = np.vstack([D0, extra_rows])
    beta = D0[:, n:]
    # H^-1 beta^T, one solve for all columns
    Winv_beta = np.linalg.solve(t.H, beta.T) if beta.size else np.zeros((n, 0))
    M = F @ Winv_beta if F.size or Winv_beta.size else np.zeros((F.shape[0], D0.shape[0]))
    rho = D0[:, :n] @ st.v + beta @ a_free
    return _System(t.H, a_free, D0, F, M, rho)


def _solve_system(sys: _System, v: np.ndarray) -> SodeResult:
    H, a_free, D0, F, M, rho = sys
    k = D0.shape[0]
    c = F.shape[0]
    if k == 0:
        return SodeResult(Classification.UNIQUE, a_free, np.zeros(c), 0.0, 0, v, M, rho)
    Mt = M.T
    rank = numerical_rank(Mt)
    if rank == k == c:
        lam = np.linalg.solve(Mt, -rho)
        cls, kdim = Classification.UNIQUE, 0
        residual = float(np.linalg.norm(Mt @ lam + rho))
    else:
        lam = np.linalg.pinv(Mt, rcond=RANK_RTOL) @ (-rho)
        residual = float(np.linalg.norm(Mt @ lam + rho))
        if residual <= CONSISTENCY_RTOL * (1.0 + float(np.linalg.norm(rho))):
            cls, kdim = Classification.UNDERDETERMINED, c - rank
        else:
            return SodeResult(Classification.INFEASIBLE, None, None, residual, 0, v, M, rho, False)
    a = a_free + np.linalg.solve(H, F.T @ lam) if c else a_free.copy()
    accel_unique = True
    if kdim:
        kern = null_space(Mt)
        accel_unique = bool(np.allclose(F.T @ kern.T, 0.0, atol=RANK_RTOL * max(1.0, np.abs(F).max())))
    return SodeResult(cls, a, lam, residual, kdim, v, M, rho, accel_unique)


def compatibility_matrix(p: NonholonomicProblem, st: State) -> CompatibilityMatrix:
    """Pairing of force covectors with annihilator generators through ``H^-1``."""
    M = _assemble(p, st).M
    if M.size == 0:
        return CompatibilityMatrix(M, 0, 1.0)
    return CompatibilityMatrix(M, numerical_rank(M), rcond(M))


def solve_sode(p: NonholonomicProblem, st: State) -> SodeResult:
    """Solve for the multipliers and constrained acceleration at ``st``."""
    return _solve_system(_assemble(p, st), st.v.copy())


def infeasibility_residual(p: NonholonomicProblem, st: State, extra_rows=None) -> float:
    """Norm of the inconsistent part of the multiplier system (0 when solvable)."""
    sys = _assemble(p, st, extra_rows)
    res = _solve_system(sys, st.v)
    return 0.0 if res.is_feasible else res.residual


def check_theorem2(p: NonholonomicProblem, st: State) -> TheoremReport:
    """Evaluate the compatibility hypotheses by explicit rank arithmetic.

    * rank condition: the force covectors span ``r + s`` dimensions;
    * intersection condition: the annihilator has rank ``r + s`` and meets
      the symplectic orthogonal of the forces only in zero;
    * regularity: the constraint differentials have rank ``r`` and
      ``S(TC^perp)`` meets ``TC`` only in zero;
    * definite Hessian: all velocity-Hessian eigenvalues share one sign.
    """
    n = p.n
    k = p.corank
    sd = symplectic_data(p.model, st)
    P = sd.poisson
    _, D0, F = p.evaluate(st)
    Fc = np.hstack([F, np.zeros_like(F)])

    force_rank = numerical_rank(Fc) if Fc.shape[0] else 0
    d0_rank = numerical_rank(D0) if k else 0

    # F^perp = {alpha : alpha . P . f = 0 for every force f}
    Fperp = null_space(Fc @ P.T) if Fc.shape[0] else np.eye(2 * n)
    if k:
        D0_basis = row_space(D0)
        joint = numerical_rank(np.vstack([D0_basis, Fperp])) if Fperp.shape[0] else d0_rank
        inter_dim = d0_rank + Fperp.shape[0] - joint
    else:
        inter_dim = 0

    dpsi = D0[: p.r]
    c_rank = numerical_rank(dpsi) if p.r else 0
    if p.r:
        tc_perp = np.linalg.solve(sd.omega.T, row_space(dpsi).T)  # columns
        S_img = np.vstack([np.zeros((n, tc_perp.shape[1])), tc_perp[:n]])
        sc_basis = row_space(S_img.T)
        reg_dim = sc_basis.shape[0] - (numerical_rank(dpsi @ sc_basis.T) if sc_basis.shape[0] else 0)
    else:
        reg_dim = 0

    eig = np.linalg.eigvalsh(0.5 * (sd.omega[:n, n:] + sd.omega[:n, n:].T))
    definite = bool(np.all(eig > 0) or np.all(eig < 0))

    return TheoremReport(
        rank_condition=force_rank == k,
        intersection_condition=d0_rank == k and inter_dim == 0,
        regularity=c_rank == p.r and reg_dim == 0,
        definite_hessian=definite,
        force_rank=force_rank,
        corank=k,
        annihilator_rank=d0_rank,
        intersection_dim=inter_dim,
        constraint_rank=c_rank,
        regularity_dim=reg_dim,
    )


def _fd_gradient(fn, st: State, h=FD_STEP) -> np.ndarray:
    x = st.as_vector()
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fn(State.from_vector(xp)) - fn(State.from_vector(xm))) / (2 * h)
    return g


def _locally_empty(p, st, fn, extra, tol, samples=8, radius=1e-3, seed=0):
    from .simulate import project_to_constraints

    rng = np.random.default_rng(seed)
    x = st.as_vector()
    for _ in range(samples):
        y = State.from_vector(x + radius * rng.uniform(-1, 1, x.size))
        try:
            y = project_to_constraints(p, y)
        except Exception:
            continue
        if fn(y) <= tol:
            return False
    return True


def integrability_algorithm(
    p: NonholonomicProblem, st: State, max_depth: int = 3, tol: float = MEMBERSHIP_TOL
) -> AlgorithmTrace:
    """Run the adapted constraint algorithm at a single state.

    Step 0 tests membership of ``st`` in the constraint set.  Step ``k``
    tests whether the multiplier system, enlarged by the differentials of
    every residual appended so far, admits a solution.  An infeasible step
    appends its residual function (gradient by central differences), which
    does not vanish at ``st``, so the state is excluded at that step.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    steps = []
    psi = p.constraint_values(st)
    worst = float(np.max(np.abs(psi))) if psi.size else 0.0
    member = worst <= tol
    steps.append(AlgorithmStep(0, member, None, worst))
    if not member:
        return AlgorithmTrace(steps, "ExcludedAtStep(0)")

    appended = []  # gradients of appended residual functions
    for k in range(1, max_depth + 1):
        extra = np.array(appended) if appended else None
        res = _solve_system(_assemble(p, st, extra), st.v)
        if res.is_feasible:
            steps.append(AlgorithmStep(k, True, True, 0.0))
            kind = "CompatibleUnique" if res.is_unique else "CompatibleNonUnique"
            verdict = kind if k == 1 else f"{kind}AtStep({k})"
            return AlgorithmTrace(steps, verdict)

        def fn(x, extra=extra):
            return infeasibility_residual(p, x, extra)

        grad = _fd_gradient(fn, st)
        empty = _locally_empty(p, st, fn, extra, tol)
        steps.append(AlgorithmStep(k, True, False, res.residual, grad, empty))
        if res.residual > tol:
            return AlgorithmTrace(steps, f"ExcludedAtStep({k})")
        appended.append(grad)
    return AlgorithmTrace(steps, "DepthExhausted")


def energy_rate(p: NonholonomicProblem, st: State, result: SodeResult | None = None) -> float:
    """``dE_L/dt`` along the solved field at ``st``."""
    result = result or solve_sode(p, st)
    return float(energy_differential(p.model, st) @ result.field())
