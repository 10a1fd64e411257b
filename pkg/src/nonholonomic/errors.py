"""Exception hierarchy shared by every module of the package."""


class NonholonomicError(Exception):
    """Base class for all errors raised by this package."""


class ExprSyntaxError(NonholonomicError, SyntaxError):
    """Malformed expression source.

    Carries the 0-based character offset where parsing failed.
    """

    def __init__(self, message, position, text=""):
        self.message = message
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")

    def __str__(self):
        return f"{self.message} at position {self.position}"


class UnboundVariable(NonholonomicError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"unbound variable {self.name!r}"


class UnknownVariable(NonholonomicError, ValueError):
    pass


class DomainError(NonholonomicError, ValueError):
    pass


class SingularHessian(NonholonomicError, ArithmeticError):
    def __init__(self, rcond):
        self.rcond = rcond
        super().__init__(f"Hessian is singular (reciprocal condition {rcond:.3e})")


class DimensionMismatch(NonholonomicError, ValueError):
    def __init__(self, forces, expected):
        self.forces = forces
        self.expected = expected
        super().__init__(
            f"{forces} force covectors given but the annihilator has {expected} generators"
        )


class NonHorizontalForce(NonholonomicError, ValueError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"force covector {index} has a non-zero dv component")


class WrongForceMode(NonholonomicError, ValueError):
    pass


class StageFailure(NonholonomicError, RuntimeError):
    def __init__(self, stage, classification, time=None):
        self.stage = stage
        self.classification = classification
        self.time = time
        where = "" if time is None else f" at t={time!r}"
        super().__init__(f"RK4 stage {stage} is {classification}{where}")


class NonFiniteState(NonholonomicError, ArithmeticError):
    pass


class ProjectionFailed(NonholonomicError, RuntimeError):
    def __init__(self, residual, time=None):
        self.residual = residual
        self.time = time
        where = "" if time is None else f" at t={time!r}"
        super().__init__(f"projection did not converge (residual {residual:.3e}){where}")


class NotProjectable(NonholonomicError, ValueError):
    pass


class OffConstraint(NonholonomicError, ValueError):
    pass


class UnknownScenario(NonholonomicError, KeyError):
    def __str__(self):
        return f"unknown scenario {self.args[0]!r}"


class InvalidParam(NonholonomicError, ValueError):
    pass


class NoClosedForm(NonholonomicError, ValueError):
    pass


class SectionError(NonholonomicError, ValueError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")
