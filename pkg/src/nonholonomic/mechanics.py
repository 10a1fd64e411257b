"""Geometry of a regular Lagrangian in a single chart of TQ.

Tangent vectors and covectors on TQ are stored as length-2n arrays in the
basis ``(d/dq, d/dv)`` and ``(dq, dv)`` respectively.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import expr as ex
from .errors import NonFiniteState, SingularHessian

#: reciprocal condition number below which the Hessian counts as singular
HESSIAN_RCOND = 1e-12


@dataclass(frozen=True)
class State:
    """A point ``(q, v)`` of TQ."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        v = np.array(self.v, dtype=float).reshape(-1)
        if q.shape != v.shape:
            raise ValueError(f"q has {q.size} entries but v has {v.size}")
        q.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_vector(cls, x) -> "State":
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], x[n:])

    @property
    def n(self) -> int:
        return self.q.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.v])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.v)))

    def check_finite(self):
        if not self.is_finite():
            raise NonFiniteState(f"state contains non-finite entries: {self.as_vector()}")
        return self


class LocalTerms(NamedTuple):
    """Lagrangian and its derivatives evaluated at one state."""

    L: float
    p: np.ndarray  # dL/dv
    dLdq: np.ndarray  # dL/dq
    H: np.ndarray  # d2L/dv dv
    C: np.ndarray  # C[i, j] = d2L/(dv_i dq_j)


class LagrangianModel:
    """A Lagrangian ``L(q, v)`` on ``R^n`` with numeric parameters.

    ``lagrangian`` may be source text or a parsed expression.  Velocities are
    referred to as ``d<coord>``.
    """

    def __init__(self, coords: Sequence[str], lagrangian, params: Mapping[str, float] | None = None):
        params = dict(params or {})
        self.coords = tuple(coords)
        self.params = {k: float(v) for k, v in params.items()}
        self.namespace = ex.Namespace(self.coords, tuple(self.params))
        self.lagrangian = self.expression(lagrangian)

        L = self.lagrangian
        qs, vs = self.coords, self.velocities
        self.momentum_exprs = [ex.diff(L, v) for v in vs]
        self.force_exprs = [ex.diff(L, q) for q in qs]
        self.hessian_exprs = [[ex.diff(p, v) for v in vs] for p in self.momentum_exprs]
        self.mixed_exprs = [[ex.diff(p, q) for q in qs] for p in self.momentum_exprs]

        n = self.n
        flat = [L, *self.momentum_exprs, *self.force_exprs]
        flat += [e for row in self.hessian_exprs for e in row]
        flat += [e for row in self.mixed_exprs for e in row]
        self._kernel = self.compile(flat)
        self._basic = self.compile([L, *self.momentum_exprs])
        self._n = n

    def __repr__(self):
        return f"LagrangianModel(coords={self.coords!r}, L={str(self.lagrangian)!r})"

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def velocities(self) -> list[str]:
        return self.namespace.velocities

    @property
    def arg_names(self) -> list[str]:
        return [*self.coords, *self.velocities, *self.params]

    def expression(self, e) -> ex.Expression:
        """Parse (or re-resolve) an expression against this model's tables."""
        if isinstance(e, ex.Expression):
            e = ex.to_source(e)
        return ex.parse(str(e), self.namespace)

    def compile(self, exprs):
        return ex.compile_many(exprs, self.arg_names)

    def args(self, s: State) -> list[float]:
        return [*s.q.tolist(), *s.v.tolist(), *self.params.values()]

    def bindings(self, s: State) -> dict[str, float]:
        return dict(zip(self.arg_names, self.args(s)))

    def with_params(self, **overrides) -> "LagrangianModel":
        return LagrangianModel(self.coords, self.lagrangian, {**self.params, **overrides})

    def local_terms(self, s: State) -> LocalTerms:
        n = self._n
        out = self._kernel(self.args(s))
        L = out[0]
        p = np.array(out[1 : 1 + n])
        g = np.array(out[1 + n : 1 + 2 * n])
        H = np.array(out[1 + 2 * n : 1 + 2 * n + n * n]).reshape(n, n)
        C = np.array(out[1 + 2 * n + n * n :]).reshape(n, n)
        return LocalTerms(L, p, g, H, C)


def hessian_rcond(H: np.ndarray) -> float:
    if H.size == 0:
        return 1.0
    sv = np.linalg.svd(H, compute_uv=False)
    if not np.all(np.isfinite(sv)) or sv[0] == 0:
        return 0.0
    return float(sv[-1] / sv[0])


def _require_regular(H):
    rc = hessian_rcond(H)
    if not rc >= HESSIAN_RCOND:
        raise SingularHessian(rc)
    return rc


def hessian(m: LagrangianModel, s: State) -> np.ndarray:
    """Velocity Hessian ``d2L/dv_i dv_j`` at ``s``."""
    return m.local_terms(s).H


def free_acceleration(m: LagrangianModel, s: State) -> np.ndarray:
    """Acceleration of the unconstrained Euler-Lagrange field at ``s``."""
    t = m.local_terms(s)
    _require_regular(t.H)
    return np.linalg.solve(t.H, t.dLdq - t.C @ s.v)


def energy(m: LagrangianModel, s: State) -> float:
    out = m._basic(m.args(s))
    return float(np.dot(s.v, out[1:]) - out[0])


def legendre(m: LagrangianModel, s: State) -> np.ndarray:
    """Momenta ``p_i = dL/dv_i``."""
    return np.array(m._basic(m.args(s))[1:])


@dataclass(frozen=True)
class SymplecticData:
    """Cartan 2-form and its inverse as 2n x 2n matrices.

    ``omega[a, b] = omega_L(e_a, e_b)`` for basis vectors ``e = (d/dq, d/dv)``
    and ``lam = inv(omega)``.  The Poisson bivector pairs covectors through
    ``poisson = lam.T``: ``Lambda_L(alpha, beta) = alpha @ poisson @ beta``.
    """

    omega: np.ndarray
    lam: np.ndarray
    n: int = field(default=0)

    @property
    def poisson(self) -> np.ndarray:
        return self.lam.T

    @property
    def w_block(self) -> np.ndarray:
        """The ``d/dq ^ d/dv`` block of the bivector; equals the inverse Hessian."""
        return self.poisson[: self.n, self.n :]

    def hamiltonian_vector(self, alpha: np.ndarray) -> np.ndarray:
        """Vector ``X`` with ``i_X omega = alpha``."""
        return np.linalg.solve(self.omega.T, alpha)


def symplectic_data(m: LagrangianModel, s: State) -> SymplecticData:
    t = m.local_terms(s)
    _require_regular(t.H)
    n = m.n
    A = t.C - t.C.T
    omega = np.zeros((2 * n, 2 * n))
    omega[:n, :n] = A
    omega[:n, n:] = t.H
    omega[n:, :n] = -t.H.T
    lam = np.linalg.inv(omega)
    return SymplecticData(omega, lam, n)


def energy_differential(m: LagrangianModel, s: State) -> np.ndarray:
    """``dE_L`` at ``s`` as a length-2n covector."""
    t = m.local_terms(s)
    return np.concatenate([t.C.T @ s.v - t.dLdq, t.H.T @ s.v])
