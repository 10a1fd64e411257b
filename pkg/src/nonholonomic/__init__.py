"""Non-holonomic Lagrangian mechanics as implicit differential equations."""

from .constraints import (
    CovectorField,
    ForceSpec,
    NonholonomicProblem,
    admissibility,
    annihilator_basis,
    build_problem,
    chetaev_forces,
)
from .expr import diff, evaluate, parse, to_source
from .mechanics import (
    LagrangianModel,
    State,
    energy,
    free_acceleration,
    hessian,
    legendre,
    symplectic_data,
)
from .problemfile import format_problem, load_problem_file, parse_problem
from .scenarios import SCENARIOS, build_scenario, oracle_state
from .simulate import Trajectory, project_to_constraints, rk4_step, simulate
from .solver import (
    Classification,
    check_theorem2,
    compatibility_matrix,
    integrability_algorithm,
    solve_sode,
)

__version__ = "0.1.0"
