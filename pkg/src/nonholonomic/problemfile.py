"""Line-oriented problem files.

Example::

    # vertical rolling disk
    coords x y theta phi
    params M=1 R=1 I1=1 I2=1
    lagrangian 0.5*M*(dx^2 + dy^2) + 0.5*I2*dtheta^2 + 0.5*I1*dphi^2
    constraint dx - R*cos(theta)*dphi
    constraint dy - R*sin(theta)*dphi
    forces chetaev

``direction`` lines hold 2n comma-separated expressions (dq coefficients
then dv coefficients).  Instead of ``forces chetaev`` a problem may list
``force`` lines of n comma-separated dq coefficients.  ``#`` starts a comment.
"""

from __future__ import annotations

from pathlib import Path

from . import expr as ex
from .constraints import CovectorField, ForceSpec, NonholonomicProblem, build_problem
from .errors import ExprSyntaxError, NonholonomicError, SectionError, UnknownVariable
from .mechanics import LagrangianModel

KEYWORDS = ("coords", "params", "lagrangian", "constraint", "direction", "forces", "force")


def _split_list(text):
    return [t.strip() for t in text.split(",")]


def parse_problem(text: str) -> NonholonomicProblem:
    coords = None
    params = {}
    lagrangian = None
    constraints, directions, forces = [], [], []
    chetaev = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key not in KEYWORDS:
            raise SectionError(lineno, f"unknown section {key!r}")
        if key != "forces" and not rest:
            raise SectionError(lineno, f"section {key!r} is empty")
        if key == "coords":
            if coords is not None:
                raise SectionError(lineno, "coords given twice")
            coords = rest.replace(",", " ").split()
        elif key == "params":
            for item in rest.replace(",", " ").split():
                name, eq, value = item.partition("=")
                if not eq:
                    raise SectionError(lineno, f"expected name=value, got {item!r}")
                try:
                    params[name] = float(value)
                except ValueError:
                    raise SectionError(lineno, f"parameter {name!r} is not a number: {value!r}") from None
        elif key == "lagrangian":
            if lagrangian is not None:
                raise SectionError(lineno, "lagrangian given twice")
            lagrangian = (lineno, rest)
        elif key == "constraint":
            constraints.append((lineno, rest))
        elif key == "direction":
            directions.append((lineno, _split_list(rest)))
        elif key == "forces":
            if rest != "chetaev":
                raise SectionError(lineno, "'forces' takes only the keyword 'chetaev'; use 'force' lines for custom forces")
            chetaev = True
        else:
            forces.append((lineno, _split_list(rest)))

    if coords is None:
        raise SectionError(0, "missing 'coords' section")
    if lagrangian is None:
        raise SectionError(0, "missing 'lagrangian' section")
    if chetaev and forces:
        raise SectionError(forces[0][0], "'force' lines conflict with 'forces chetaev'")

    try:
        ns = ex.Namespace(coords, tuple(params))
    except UnknownVariable as e:
        raise SectionError(0, str(e)) from e

    def parse_at(lineno, src):
        try:
            return ex.parse(src, ns)
        except (ExprSyntaxError, UnknownVariable) as e:
            raise SectionError(lineno, f"{type(e).__name__}: {e}") from e

    n = len(coords)
    L = parse_at(*lagrangian)
    psi = [parse_at(ln, src) for ln, src in constraints]
    dirs = []
    for ln, items in directions:
        if len(items) != 2 * n:
            raise SectionError(ln, f"direction needs {2 * n} expressions, got {len(items)}")
        exprs = [parse_at(ln, s) for s in items]
        dirs.append(CovectorField(tuple(exprs[:n]), tuple(exprs[n:])))
    covs = []
    for ln, items in forces:
        if len(items) != n:
            raise SectionError(ln, f"force needs {n} expressions, got {len(items)}")
        covs.append(CovectorField(tuple(parse_at(ln, s) for s in items), (ex.ZERO,) * n))

    model = LagrangianModel(coords, L, params)
    spec = ForceSpec.custom(covs) if forces else ForceSpec.chetaev()
    return build_problem(model, psi, dirs, spec)


def load_problem_file(path) -> NonholonomicProblem:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise NonholonomicError(f"cannot read problem file {path}: {e}") from e
    return parse_problem(text)


def format_problem(p: NonholonomicProblem) -> str:
    """Serialize a problem; ``parse_problem`` of the result behaves identically."""
    m = p.model
    lines = [f"coords {' '.join(m.coords)}"]
    if m.params:
        lines.append("params " + " ".join(f"{k}={v!r}" for k, v in m.params.items()))
    lines.append(f"lagrangian {ex.to_source(m.lagrangian)}")
    lines += [f"constraint {ex.to_source(e)}" for e in p.psi]
    for d in p.directions:
        lines.append("direction " + ", ".join(ex.to_source(e) for e in (*d.gamma, *d.beta)))
    if p.forces.is_chetaev:
        lines.append("forces chetaev")
    else:
        for f in p.forces.covectors:
            lines.append("force " + ", ".join(ex.to_source(e) for e in f.gamma))
    return "\n".join(lines) + "\n"
