"""Constraint submanifold, permitted directions and reaction forces.

The permitted-direction bundle D is never stored as vectors; only its
annihilator is, through generating covectors evaluated pointwise: the
differentials of the constraint functions followed by the extra direction
covectors.  Force covectors are horizontal and carry only dq coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import expr as ex
from .errors import DimensionMismatch, NonHorizontalForce, WrongForceMode
from .linalg import numerical_rank
from .mechanics import LagrangianModel, State


@dataclass(frozen=True)
class CovectorField:
    """``gamma_i dq^i + beta_i dv^i`` with expression coefficients."""

    gamma: tuple[ex.Expression, ...]
    beta: tuple[ex.Expression, ...]

    @classmethod
    def parse(cls, model: LagrangianModel, gamma, beta=None) -> "CovectorField":
        g = tuple(model.expression(e) for e in gamma)
        b = tuple(model.expression(e) for e in (beta if beta is not None else ["0"] * len(g)))
        if len(g) != model.n or len(b) != model.n:
            raise DimensionMismatch(len(g) + len(b), 2 * model.n)
        return cls(g, b)

    @property
    def is_horizontal(self) -> bool:
        return all(isinstance(e, ex.Const) and e.value == 0.0 for e in self.beta)


@dataclass(frozen=True)
class ForceSpec:
    """Either the Chetaev bundle (``covectors is None``) or custom covectors."""

    covectors: tuple[CovectorField, ...] | None = None

    @classmethod
    def chetaev(cls) -> "ForceSpec":
        return cls(None)

    @classmethod
    def custom(cls, covectors: Sequence[CovectorField]) -> "ForceSpec":
        return cls(tuple(covectors))

    @property
    def is_chetaev(self) -> bool:
        return self.covectors is None

    def __str__(self):
        return "chetaev" if self.is_chetaev else f"custom({len(self.covectors)})"


class Admissibility(NamedTuple):
    admissible: bool
    rank: int


class NonholonomicProblem:
    """A Lagrangian together with constraints, directions and forces.

    Build instances with :func:`build_problem`.
    """

    def __init__(self, model, psi, directions, forces):
        self.model = model
        self.psi = tuple(psi)
        self.directions = tuple(directions)
        self.forces = forces
        n = model.n
        qs, vs = model.coords, model.velocities
        self.psi_q_exprs = [[ex.diff(f, q) for q in qs] for f in self.psi]
        self.psi_v_exprs = [[ex.diff(f, v) for v in vs] for f in self.psi]

        flat = list(self.psi)
        for row in self.psi_q_exprs + self.psi_v_exprs:
            flat += row
        for d in self.directions:
            flat += [*d.gamma, *d.beta]
        if not forces.is_chetaev:
            for f in forces.covectors:
                flat += list(f.gamma)
        self._kernel = model.compile(flat)
        self._psi_kernel = model.compile(list(self.psi))
        self._n = n

    def __repr__(self):
        return (
            f"NonholonomicProblem(n={self.n}, r={self.r}, s={self.s}, "
            f"forces={self.forces})"
        )

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def r(self) -> int:
        return len(self.psi)

    @property
    def s(self) -> int:
        return len(self.directions)

    @property
    def corank(self) -> int:
        return self.r + self.s

    @property
    def is_unconstrained(self) -> bool:
        return self.corank == 0

    def evaluate(self, st: State):
        """Return ``(psi, D0, F)`` evaluated at ``st``.

        ``D0`` is ``(r+s) x 2n``; ``F`` holds the dq coefficients of the force
        generators, ``c x n``.
        """
        n, r, s = self._n, self.r, self.s
        out = self._kernel(self.model.args(st))
        psi = np.array(out[:r])
        i = r
        dq = np.array(out[i : i + r * n]).reshape(r, n)
        i += r * n
        dv = np.array(out[i : i + r * n]).reshape(r, n)
        i += r * n
        dirs = np.array(out[i : i + 2 * n * s]).reshape(s, 2 * n)
        i += 2 * n * s
        D0 = np.vstack([np.hstack([dq, dv]), dirs]) if r + s else np.zeros((0, 2 * n))
        if self.forces.is_chetaev:
            F = D0[:, n:].copy()
        else:
            F = np.array(out[i:]).reshape(len(self.forces.covectors), n)
        return psi, D0, F

    def constraint_values(self, st: State) -> np.ndarray:
        return np.array(self._psi_kernel(self.model.args(st)))

    def on_constraint(self, st: State, tol: float = 1e-9) -> bool:
        psi = self.constraint_values(st)
        return bool(np.all(np.abs(psi) <= tol))


def build_problem(
    model: LagrangianModel,
    psi=(),
    directions=(),
    forces: ForceSpec | None = None,
) -> NonholonomicProblem:
    """Validate and assemble a non-holonomic problem.

    ``psi`` are constraint functions (text or expressions); ``directions`` are
    :class:`CovectorField` or ``(gamma, beta)`` pairs of expression lists.
    """
    forces = forces or ForceSpec.chetaev()
    psi = [model.expression(e) for e in psi]
    dirs = []
    for d in directions:
        if not isinstance(d, CovectorField):
            d = CovectorField.parse(model, *d)
        dirs.append(CovectorField(tuple(map(model.expression, d.gamma)), tuple(map(model.expression, d.beta))))
    if not forces.is_chetaev:
        covs = []
        for k, f in enumerate(forces.covectors):
            if not isinstance(f, CovectorField):
                f = CovectorField.parse(model, f)
            if len(f.gamma) != model.n or len(f.beta) != model.n:
                raise DimensionMismatch(len(f.gamma), model.n)
            if not f.is_horizontal:
                raise NonHorizontalForce(k)
            covs.append(CovectorField(tuple(map(model.expression, f.gamma)), f.beta))
        if len(covs) != len(psi) + len(dirs):
            raise DimensionMismatch(len(covs), len(psi) + len(dirs))
        forces = ForceSpec.custom(covs)
    return NonholonomicProblem(model, psi, dirs, forces)


def annihilator_basis(p: NonholonomicProblem, st: State) -> np.ndarray:
    """Generators of the annihilator of D at ``st`` as rows ``(gamma | beta)``."""
    return p.evaluate(st)[1]


def chetaev_forces(p: NonholonomicProblem, st: State) -> np.ndarray:
    """dq coefficients of ``S*`` applied to the annihilator generators."""
    if not p.forces.is_chetaev:
        raise WrongForceMode("problem uses custom forces, not the Chetaev bundle")
    return p.evaluate(st)[2]


def force_rows(p: NonholonomicProblem, st: State) -> np.ndarray:
    return p.evaluate(st)[2]


def admissibility(p: NonholonomicProblem, st: State) -> Admissibility:
    """Whether ``S*`` is injective on the annihilator, with the rank of its image."""
    D0 = annihilator_basis(p, st)
    rank = numerical_rank(D0[:, p.n :]) if D0.shape[0] else 0
    return Admissibility(rank == p.corank, rank)
